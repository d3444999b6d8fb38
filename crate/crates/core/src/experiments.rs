//! Scripted scenario runners: the auxiliary `k`-limit sweep, the
//! decay/observability ensemble, and the nonlinear-vs-linear comparison.
//! Runners return tables; callers decide what to write or assert.

use crate::analysis::{self, identity_residual, DecayFit};
use crate::config::Scenario;
use crate::csvio;
use crate::error::{Error, Result};
use crate::nonlinear::Nonlinearity;
use crate::operator::assemble;
use crate::solver::{self, h1l2_distance, initial_data, InitialData, SolverConfig, Trajectory};
use std::path::Path;

/// One row of the `k`-sweep table.
#[derive(Clone, Copy, Debug)]
pub struct KSweepRow {
    pub k: f64,
    /// `sup_t` of the discrete `H^1_0 x L^2` distance to the `k = inf` run.
    pub sup_dist_to_ref: f64,
    /// Frictional dissipation at the final time, `(1/k) int int b |u_t|^2`.
    pub fric_diss: f64,
    pub kv_diss: f64,
}

#[derive(Clone, Debug)]
pub struct KSweepResult {
    pub rows: Vec<KSweepRow>,
    /// Distances decrease monotonically toward the reference run.
    pub distances_monotone: bool,
    /// `fric_diss[i]/fric_diss[i+1] / (k[i+1]/k[i])` per consecutive pair
    /// (one for exact `1/k` scaling).
    pub scaling_ratios: Vec<f64>,
    pub trajectories: Vec<(f64, Trajectory)>,
    pub reference: Trajectory,
}

/// Sweep the auxiliary-problem index: each `k` sets both the truncation level
/// of the nonlinearity and the `1/k` friction scale; the reference run is the
/// untruncated frictionless problem (`k = inf`).
pub fn k_sweep(scenario: &Scenario, k_list: &[f64]) -> Result<KSweepResult> {
    if k_list.is_empty() {
        return Err(Error::Sweep("empty k list".into()));
    }
    if k_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Sweep(format!("k list must be ascending, got {k_list:?}")));
    }
    if k_list.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::Sweep("k values must be positive".into()));
    }
    let op = assemble(&scenario.grid, &scenario.coeffs)?;
    let (u0, v0) = initial_data(&scenario.grid, &scenario.initial)?;

    let run_with = |k: f64| -> Result<Trajectory> {
        let nl = Nonlinearity {
            k,
            ..scenario.nl
        };
        let cfg = SolverConfig {
            k_aux: k,
            ..scenario.solver
        };
        solver::run_assembled(&op, &nl, &u0, &v0, &cfg)
    };

    let reference = run_with(f64::INFINITY)?;
    let mut rows = Vec::with_capacity(k_list.len());
    let mut trajectories = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let traj = run_with(k)?;
        let sup_dist = traj
            .states
            .iter()
            .zip(&reference.states)
            .map(|(a, b)| h1l2_distance(&op, a, b))
            .fold(0.0, f64::max);
        let last = traj.records.last().expect("nonempty");
        rows.push(KSweepRow {
            k,
            sup_dist_to_ref: sup_dist,
            fric_diss: last.cum_diss_fric,
            kv_diss: last.cum_diss_kv,
        });
        trajectories.push((k, traj));
    }
    let distances_monotone = rows
        .windows(2)
        .all(|w| w[1].sup_dist_to_ref < w[0].sup_dist_to_ref);
    let scaling_ratios = rows
        .windows(2)
        .map(|w| {
            if w[1].fric_diss > 0.0 {
                (w[0].fric_diss / w[1].fric_diss) / (w[1].k / w[0].k)
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(KSweepResult {
        rows,
        distances_monotone,
        scaling_ratios,
        trajectories,
        reference,
    })
}

/// One ensemble member of the decay experiment.
#[derive(Clone, Debug)]
pub struct EnsembleMember {
    pub index: usize,
    pub seed: u64,
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    /// Observability ratio `E(0)/dissipated(0..T0)`.
    pub obs_ratio: f64,
    pub obs_crosscheck: f64,
    /// `lambda0_fitted >= 0.8 * lambda0_pred` (filled once the ensemble
    /// constant is known).
    pub lower_bound_ok: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct DecayExperimentResult {
    pub members: Vec<EnsembleMember>,
    /// Ensemble observability constant: max ratio over members.
    pub c_est: f64,
    /// `ln(1 + 1/C)/T0`.
    pub lambda_pred: f64,
    pub t0: f64,
    pub all_bounds_ok: bool,
    pub trajectories: Vec<Trajectory>,
}

/// Run an ensemble of unit-norm random data on a damped scenario, fit the
/// decay of each member, and compare against the rate predicted from the
/// ensemble observability constant.
pub fn decay_experiment(
    scenario: &Scenario,
    ensemble_size: usize,
    seed: u64,
) -> Result<DecayExperimentResult> {
    if ensemble_size == 0 {
        return Err(Error::Sweep("ensemble size must be >= 1".into()));
    }
    if scenario.coeffs.max_a() == 0.0 {
        return Err(Error::UndampedConfiguration);
    }
    let op = assemble(&scenario.grid, &scenario.coeffs)?;
    let norm = match &scenario.initial {
        InitialData::RandomH1 { norm, .. } => *norm,
        _ => 1.0,
    };
    let modes = match &scenario.initial {
        InitialData::RandomH1 { modes, .. } => *modes,
        _ => 16,
    };

    let mut members = Vec::with_capacity(ensemble_size);
    let mut trajectories = Vec::with_capacity(ensemble_size);
    for idx in 0..ensemble_size {
        let member_seed = seed.wrapping_add(idx as u64);
        let (u0, v0) = initial_data(
            &scenario.grid,
            &InitialData::RandomH1 {
                seed: member_seed,
                norm,
                modes,
            },
        )?;
        let traj = solver::run_assembled(&op, &scenario.nl, &u0, &v0, &scenario.solver)?;
        let floor = scenario.fit_floor_rel * traj.initial_energy();
        let (fit, fit_error) = match analysis::fit_decay(&traj.records, scenario.fit_window, floor)
        {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let obs = analysis::observability(&traj.records, scenario.solver.k_aux, scenario.t0)?;
        members.push(EnsembleMember {
            index: idx,
            seed: member_seed,
            fit,
            fit_error,
            obs_ratio: obs.ratio,
            obs_crosscheck: obs.crosscheck,
            lower_bound_ok: None,
        });
        trajectories.push(traj);
    }

    let c_est = members
        .iter()
        .map(|m| m.obs_ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let lambda_pred = analysis::rate_from_observability(c_est, scenario.t0)?;
    let mut all_ok = true;
    for m in &mut members {
        let ok = m.fit.map(|f| f.lambda0 >= 0.8 * lambda_pred);
        m.lower_bound_ok = ok;
        all_ok &= ok.unwrap_or(false);
    }
    Ok(DecayExperimentResult {
        members,
        c_est,
        lambda_pred,
        t0: scenario.t0,
        all_bounds_ok: all_ok,
        trajectories,
    })
}

/// One case of the nonlinear-vs-linear comparison.
#[derive(Clone, Debug)]
pub struct ComparisonCase {
    pub name: &'static str,
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    pub max_identity_residual: f64,
    pub min_nl_potential: f64,
    pub monotone: bool,
    pub trajectory: Trajectory,
}

/// Run the scenario once with its nonlinearity and once with `f = 0`.
pub fn nonlinear_vs_linear(scenario: &Scenario) -> Result<Vec<ComparisonCase>> {
    let op = assemble(&scenario.grid, &scenario.coeffs)?;
    let (u0, v0) = initial_data(&scenario.grid, &scenario.initial)?;
    let cases = [("linear", Nonlinearity::zero()), ("nonlinear", scenario.nl)];
    let mut out = Vec::new();
    for (name, nl) in cases {
        let traj = solver::run_assembled(&op, &nl, &u0, &v0, &scenario.solver)?;
        let e0 = traj.initial_energy();
        let (max_resid, _) = identity_residual(&traj.records);
        let monotone = traj
            .records
            .windows(2)
            .all(|w| w[1].e <= w[0].e + 1e-12 * e0);
        let min_nl = traj
            .records
            .iter()
            .map(|r| r.nl_potential)
            .fold(f64::INFINITY, f64::min);
        let floor = scenario.fit_floor_rel * e0.max(f64::MIN_POSITIVE);
        let (fit, fit_error) = if e0 > 0.0 {
            match analysis::fit_decay(&traj.records, scenario.fit_window, floor) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, Some("zero initial energy".into()))
        };
        out.push(ComparisonCase {
            name,
            fit,
            fit_error,
            max_identity_residual: max_resid,
            min_nl_potential: min_nl,
            monotone,
            trajectory: traj,
        });
    }
    Ok(out)
}

// ---- file layout: experiment/<name>/run_<idx>.csv + summary.csv ----

fn experiment_dir(out_dir: &Path, name: &str) -> std::path::PathBuf {
    out_dir.join("experiment").join(name)
}

pub fn write_k_sweep(out_dir: &Path, result: &KSweepResult) -> Result<std::path::PathBuf> {
    let dir = experiment_dir(out_dir, "k_sweep");
    std::fs::create_dir_all(&dir)?;
    for (idx, (_, traj)) in result.trajectories.iter().enumerate() {
        csvio::write_trajectory(&dir.join(format!("run_{idx}.csv")), &traj.records)?;
    }
    csvio::write_trajectory(
        &dir.join(format!("run_{}.csv", result.trajectories.len())),
        &result.reference.records,
    )?;
    let mut s = String::from("k,sup_dist_to_ref,fric_diss,kv_diss\n");
    for row in &result.rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            row.k, row.sup_dist_to_ref, row.fric_diss, row.kv_diss
        ));
    }
    let path = dir.join("summary.csv");
    std::fs::write(&path, s)?;
    Ok(path)
}

pub fn write_decay_experiment(
    out_dir: &Path,
    result: &DecayExperimentResult,
) -> Result<std::path::PathBuf> {
    let dir = experiment_dir(out_dir, "decay");
    std::fs::create_dir_all(&dir)?;
    for (idx, traj) in result.trajectories.iter().enumerate() {
        csvio::write_trajectory(&dir.join(format!("run_{idx}.csv")), &traj.records)?;
    }
    let mut s =
        String::from("member,seed,lambda0,c,r2,obs_ratio,lambda_pred,lower_bound_ok,fit_error\n");
    for m in &result.members {
        let (l, c, r2) = m
            .fit
            .map(|f| (f.lambda0, f.c, f.r2))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            m.index,
            m.seed,
            l,
            c,
            r2,
            m.obs_ratio,
            result.lambda_pred,
            m.lower_bound_ok.map(|b| b.to_string()).unwrap_or_default(),
            m.fit_error.clone().unwrap_or_default()
        ));
    }
    let path = dir.join("summary.csv");
    std::fs::write(&path, s)?;
    Ok(path)
}

pub fn write_nl_vs_linear(out_dir: &Path, cases: &[ComparisonCase]) -> Result<std::path::PathBuf> {
    let dir = experiment_dir(out_dir, "nl_vs_linear");
    std::fs::create_dir_all(&dir)?;
    for (idx, case) in cases.iter().enumerate() {
        csvio::write_trajectory(&dir.join(format!("run_{idx}.csv")), &case.trajectory.records)?;
    }
    let mut s = String::from("case,lambda0,r2,max_identity_residual,min_nl_potential,monotone\n");
    for case in cases {
        let (l, r2) = case
            .fit
            .map(|f| (f.lambda0, f.r2))
            .unwrap_or((f64::NAN, f64::NAN));
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            case.name, l, r2, case.max_identity_residual, case.min_nl_potential, case.monotone
        ));
    }
    let path = dir.join("summary.csv");
    std::fs::write(&path, s)?;
    Ok(path)
}

/// Sweep a named geometry parameter (or the ramp width): rebuild the scenario
/// with the overridden value and run it once per value.
pub fn geometry_sweep(
    scenario: &Scenario,
    param: &str,
    values: &[f64],
) -> Result<Vec<(f64, Trajectory)>> {
    if values.is_empty() {
        return Err(Error::Sweep("empty sweep values".into()));
    }
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        let mut cfg = scenario.resolved.clone();
        match param {
            "a0" => cfg.geometry.a0 = v,
            "b0" => cfg.geometry.b0 = v,
            "eps" => cfg.geometry.eps = v,
            "ramp" => cfg.geometry.ramp = Some(v),
            other => {
                return Err(Error::Sweep(format!(
                    "unknown geometry parameter {other:?}"
                )))
            }
        }
        let sc = cfg.resolve()?;
        let (u0, v0) = initial_data(&sc.grid, &sc.initial)?;
        let traj = solver::run(&sc.grid, &sc.coeffs, &sc.nl, &u0, &v0, &sc.solver)?;
        out.push((v, traj));
    }
    Ok(out)
}

pub fn write_geometry_sweep(
    out_dir: &Path,
    name: &str,
    rows: &[(f64, Trajectory)],
) -> Result<std::path::PathBuf> {
    let dir = experiment_dir(out_dir, name);
    std::fs::create_dir_all(&dir)?;
    let mut s = String::from("value,final_e,e0,max_identity_residual\n");
    for (idx, (v, traj)) in rows.iter().enumerate() {
        csvio::write_trajectory(&dir.join(format!("run_{idx}.csv")), &traj.records)?;
        let (resid, _) = identity_residual(&traj.records);
        s.push_str(&format!(
            "{},{},{},{}\n",
            v,
            traj.final_energy(),
            traj.initial_energy(),
            resid
        ));
    }
    let path = dir.join("summary.csv");
    std::fs::write(&path, s)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn scenario(toml_text: &str) -> Scenario {
        ScenarioConfig::from_toml_str(toml_text)
            .unwrap()
            .resolve()
            .unwrap()
    }

    const SWEEP_BASE: &str = r#"
seed = 99

[grid]
dim = 1
lengths = [1.0]
counts = [100]

[geometry]
preset = "interval_1d"
a_start = 0.4
a_end = 0.6
a0 = 1.0
b0 = 1.0
eps = 0.1
ramp = 0.05

[nonlinearity]
kind = "power"
p = 3.0
k = 10.0

[solver]
dt = 2e-3
t_end = 3.0
record_stride = 10

[initial_data]
kind = "random_h1"
norm = 1.0
modes = 16
"#;

    #[test]
    fn k_sweep_rejects_bad_lists() {
        let sc = scenario(SWEEP_BASE);
        assert!(matches!(k_sweep(&sc, &[]), Err(Error::Sweep(_))));
        assert!(matches!(k_sweep(&sc, &[4.0, 1.0]), Err(Error::Sweep(_))));
    }

    #[test]
    fn k_sweep_with_zero_friction_is_k_independent() {
        let mut cfg = ScenarioConfig::from_toml_str(SWEEP_BASE).unwrap();
        cfg.geometry.b0 = 0.0;
        cfg.solver.t_end = 0.5;
        // untruncated nonlinearity so only the friction term could differ
        cfg.nonlinearity.k = f64::INFINITY;
        let sc = cfg.resolve().unwrap();
        let result = k_sweep(&sc, &[1.0, 16.0]).unwrap();
        for row in &result.rows {
            assert!(
                row.sup_dist_to_ref < 1e-12,
                "k = {}: trajectories must coincide, dist {:e}",
                row.k,
                row.sup_dist_to_ref
            );
            assert_eq!(row.fric_diss, 0.0);
        }
    }

    #[test]
    fn decay_experiment_refuses_undamped() {
        let mut cfg = ScenarioConfig::from_toml_str(SWEEP_BASE).unwrap();
        cfg.geometry.preset = "undamped".into();
        let sc = cfg.resolve().unwrap();
        assert!(matches!(
            decay_experiment(&sc, 2, 1),
            Err(Error::UndampedConfiguration)
        ));
    }

    #[test]
    fn fully_damped_rate_matches_spectral_abscissa() {
        // single-member cross-module check: constant weak damping, rate of a
        // long run from the slowest mode matches twice the abscissa
        let text = r#"
seed = 5

[grid]
dim = 1
lengths = [1.0]
counts = [60]

[geometry]
preset = "constant"
a0 = 0.01

[nonlinearity]
kind = "zero"

[solver]
dt = 0.02
t_end = 80.0
record_stride = 20

[analysis]
fit_window = [30.0, 80.0]

[initial_data]
kind = "random_h1"
norm = 1.0
modes = 8
"#;
        let sc = scenario(text);
        let result = decay_experiment(&sc, 1, 5).unwrap();
        let fit = result.members[0].fit.expect("fit");
        let op = assemble(&sc.grid, &sc.coeffs).unwrap();
        let gen =
            crate::spectral::assemble_generator(&op, &sc.nl, f64::INFINITY, false).unwrap();
        let eigs = crate::spectral::spectrum(&gen).unwrap();
        let absc = crate::spectral::abscissa(&eigs);
        let ratio = fit.lambda0 / (2.0 * absc.abs());
        assert!(
            (0.9..1.1).contains(&ratio),
            "fitted {} vs 2|abscissa| {}",
            fit.lambda0,
            2.0 * absc.abs()
        );
    }

    #[test]
    fn nonlinear_vs_linear_comparison() {
        let mut cfg = ScenarioConfig::from_toml_str(SWEEP_BASE).unwrap();
        cfg.solver.t_end = 1.0;
        let sc = cfg.resolve().unwrap();
        let cases = nonlinear_vs_linear(&sc).unwrap();
        assert_eq!(cases.len(), 2);
        for case in &cases {
            assert!(case.monotone, "{} run must decay monotonically", case.name);
            let e0 = case.trajectory.initial_energy();
            assert!(case.max_identity_residual < 1e-8 * e0);
            assert!(case.min_nl_potential >= 0.0);
        }
        assert_eq!(cases[0].trajectory.records[0].nl_potential, 0.0);
        assert!(cases[1].trajectory.records[0].nl_potential > 0.0);
    }

    #[test]
    fn zero_data_gives_identical_zero_trajectories() {
        let mut cfg = ScenarioConfig::from_toml_str(SWEEP_BASE).unwrap();
        cfg.initial_data.kind = "gaussian".into();
        cfg.initial_data.center = Some(vec![0.5]);
        cfg.initial_data.width = Some(0.1);
        cfg.initial_data.amplitude = 0.0;
        cfg.solver.t_end = 0.2;
        let sc = cfg.resolve().unwrap();
        let cases = nonlinear_vs_linear(&sc).unwrap();
        for case in &cases {
            assert_eq!(case.trajectory.final_energy(), 0.0);
        }
    }

    #[test]
    fn geometry_sweep_runs_per_value() {
        let mut cfg = ScenarioConfig::from_toml_str(SWEEP_BASE).unwrap();
        cfg.solver.t_end = 0.2;
        let sc = cfg.resolve().unwrap();
        let rows = geometry_sweep(&sc, "ramp", &[0.02, 0.05]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(geometry_sweep(&sc, "nope", &[0.1]).is_err());
        assert!(geometry_sweep(&sc, "ramp", &[]).is_err());
    }
}
