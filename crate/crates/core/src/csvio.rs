//! CSV serialization of trajectories and spectra.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a rerun
//! of the same deterministic computation produces byte-identical files.

use crate::analysis::EnergyRecord;
use crate::error::{Error, Result};
use crate::spectral::SpectrumReport;
use std::fmt::Write as _;
use std::path::Path;

/// Exact column order of trajectory CSVs.
pub const TRAJECTORY_HEADER: &str =
    "t,E,kinetic,potential,nl_potential,cum_diss_kv,cum_diss_fric,identity_residual";

pub fn trajectory_to_string(records: &[EnergyRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for r in records {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.e,
            r.kinetic,
            r.potential,
            r.nl_potential,
            r.cum_diss_kv,
            r.cum_diss_fric,
            r.identity_residual
        )
        .expect("string write");
    }
    s
}

pub fn write_trajectory(path: &Path, records: &[EnergyRecord]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, trajectory_to_string(records))?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Vec<EnergyRecord>> {
    let text = std::fs::read_to_string(path)?;
    parse_trajectory(&text).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))
}

pub fn parse_trajectory(text: &str) -> std::result::Result<Vec<EnergyRecord>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    if header.trim() != TRAJECTORY_HEADER {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", lineno + 2))?;
        if fields.len() != 8 {
            return Err(format!("line {}: expected 8 fields", lineno + 2));
        }
        records.push(EnergyRecord {
            t: fields[0],
            e: fields[1],
            kinetic: fields[2],
            potential: fields[3],
            nl_potential: fields[4],
            cum_diss_kv: fields[5],
            cum_diss_fric: fields[6],
            identity_residual: fields[7],
        });
    }
    Ok(records)
}

/// Spectrum CSV: `index,re,im,branch` with an empty branch column for
/// unmatched eigenvalues.
pub const SPECTRUM_HEADER: &str = "index,re,im,branch";

pub fn spectrum_to_string(report: &SpectrumReport) -> String {
    let mut s = String::new();
    s.push_str(SPECTRUM_HEADER);
    s.push('\n');
    for (i, z) in report.eigenvalues.iter().enumerate() {
        let branch = report
            .branches
            .iter()
            .find(|b| b.re == z.re && b.im == z.im)
            .map(|b| b.j.to_string())
            .unwrap_or_default();
        writeln!(s, "{i},{},{},{branch}", z.re, z.im).expect("string write");
    }
    s
}

pub fn write_spectrum(path: &Path, report: &SpectrumReport) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, spectrum_to_string(report))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_roundtrip_is_exact() {
        let records = vec![
            EnergyRecord {
                t: 0.0,
                e: 1.0 / 3.0,
                kinetic: 0.1,
                potential: 0.2,
                nl_potential: 1e-300,
                cum_diss_kv: 0.0,
                cum_diss_fric: 0.0,
                identity_residual: -3.14e-16,
            },
            EnergyRecord {
                t: 0.1,
                e: 0.25,
                kinetic: 0.05,
                potential: 0.2,
                nl_potential: 0.0,
                cum_diss_kv: 0.083,
                cum_diss_fric: f64::MIN_POSITIVE,
                identity_residual: 0.0,
            },
        ];
        let text = trajectory_to_string(&records);
        let parsed = parse_trajectory(&text).unwrap();
        assert_eq!(records, parsed);
        // serialization is stable
        assert_eq!(text, trajectory_to_string(&parsed));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_trajectory("").is_err());
        assert!(parse_trajectory("a,b\n").is_err());
        let bad = format!("{TRAJECTORY_HEADER}\n1,2,3\n");
        assert!(parse_trajectory(&bad).is_err());
    }
}
