//! Energies, the discrete energy identity, decay fitting, and observability
//! ratios.
//!
//! The discrete energy is
//! `E = 1/2 <rho v, v> cv + 1/2 <L_h u, u> cv + sum_i rho_i F_k(u_i) cv`
//! with `cv` the cell volume; its gradient part uses exactly the bilinear
//! form the integrator dissipates, so
//! `E(t) - E(0) + cum_kv(t) + cum_fric(t) = O(solver tolerance)`.

use crate::error::{Error, Result};
use crate::nonlinear::Nonlinearity;
use crate::operator::DiscreteOperator;
use crate::solver::State;

/// One row of the energy time series. `identity_residual` is
/// `E(t) - E(0) + cum_diss_kv + cum_diss_fric`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub e: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub nl_potential: f64,
    pub cum_diss_kv: f64,
    pub cum_diss_fric: f64,
    pub identity_residual: f64,
}

/// Instantaneous energy of a state (cumulative fields zero).
pub fn energy(state: &State, op: &DiscreteOperator, nl: &Nonlinearity) -> EnergyRecord {
    let cv = op.cell_volume();
    let kinetic = 0.5 * op.mass_form(&state.v, &state.v) * cv;
    let potential = 0.5 * op.stiffness.quadratic_form(&state.u) * cv;
    let nl_potential = if nl.is_zero() {
        0.0
    } else {
        state
            .u
            .iter()
            .zip(&op.mass)
            .map(|(&u, &m)| m * nl.eval_big_f(u))
            .sum::<f64>()
            * cv
    };
    EnergyRecord {
        t: state.t,
        e: kinetic + potential + nl_potential,
        kinetic,
        potential,
        nl_potential,
        cum_diss_kv: 0.0,
        cum_diss_fric: 0.0,
        identity_residual: 0.0,
    }
}

/// Recompute the identity residual series `r(t) = E(t) - E(0) + cum_kv + cum_fric`
/// from a record series; returns `(max |r|, series)`.
pub fn identity_residual(records: &[EnergyRecord]) -> (f64, Vec<f64>) {
    if records.is_empty() {
        return (0.0, Vec::new());
    }
    let e0 = records[0].e;
    let series: Vec<f64> = records
        .iter()
        .map(|r| r.e - e0 + r.cum_diss_kv + r.cum_diss_fric)
        .collect();
    let max = series.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    (max, series)
}

/// Least-squares exponential fit of a record series.
#[derive(Clone, Copy, Debug)]
pub struct DecayFit {
    /// Fitted rate: `E(t) ~ C e^{-lambda0 t} E(0)`.
    pub lambda0: f64,
    /// Prefactor normalized by `E(0)`.
    pub c: f64,
    pub window: (f64, f64),
    /// RMS residual of the `log E` fit.
    pub rms_residual: f64,
    /// Goodness of fit of the log-linear model.
    pub r2: f64,
    pub n_points: usize,
}

/// Fit `log E` against `t` on `window`, using only records with `E > floor`.
/// Requires at least 10 usable records.
pub fn fit_decay(records: &[EnergyRecord], window: (f64, f64), floor: f64) -> Result<DecayFit> {
    if records.is_empty() {
        return Err(Error::Fit("empty record series".into()));
    }
    let e0 = records[0].e;
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Fit(format!("window [{lo}, {hi}] is empty")));
    }
    let in_window: Vec<&EnergyRecord> = records
        .iter()
        .filter(|r| r.t >= lo - 1e-12 && r.t <= hi + 1e-12)
        .collect();
    if in_window.is_empty() {
        return Err(Error::Fit(format!(
            "no records inside window [{lo}, {hi}]"
        )));
    }
    let pts: Vec<(f64, f64)> = in_window
        .iter()
        .filter(|r| r.e > floor)
        .map(|r| (r.t, r.e.ln()))
        .collect();
    if pts.is_empty() {
        return Err(Error::Fit(format!(
            "all {} records in the window lie below the floor {floor:e}",
            in_window.len()
        )));
    }
    if pts.len() < 10 {
        return Err(Error::Fit(format!(
            "need at least 10 records above the floor in the window, got {}",
            pts.len()
        )));
    }

    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sty: f64 = pts
        .iter()
        .map(|p| (p.0 - mean_t) * (p.1 - mean_y))
        .sum();
    if stt == 0.0 {
        return Err(Error::Fit("degenerate window: all records at one time".into()));
    }
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(DecayFit {
        lambda0: -slope,
        c: intercept.exp() / e0,
        window,
        rms_residual: (ss_res / n).sqrt(),
        r2,
        n_points: pts.len(),
    })
}

/// Observability ratio `E(0) / dissipated(0..T)` of a damped run.
#[derive(Clone, Copy, Debug)]
pub struct ObservabilityReport {
    /// Requested horizon.
    pub t_requested: f64,
    /// Record time actually used (first record at or after the horizon).
    pub t_used: f64,
    pub e0: f64,
    pub e_at_t: f64,
    /// `cum_diss_kv(T) + cum_diss_fric(T)`.
    pub denom: f64,
    /// `E(0) / denom` — the empirical observability constant of this run.
    pub ratio: f64,
    /// `|denom - (E(0) - E(T))|`, which the energy identity pins near zero.
    pub crosscheck: f64,
    pub k_aux: f64,
}

/// Evaluate the observability ratio at horizon `t` (quantized up to the
/// first record at or after `t`).
pub fn observability(records: &[EnergyRecord], k_aux: f64, t: f64) -> Result<ObservabilityReport> {
    if records.is_empty() {
        return Err(Error::Fit("empty record series".into()));
    }
    let rec = records
        .iter()
        .find(|r| r.t >= t - 1e-9)
        .ok_or(Error::HorizonNotReached(t))?;
    let e0 = records[0].e;
    let denom = rec.cum_diss_kv + rec.cum_diss_fric;
    if denom <= 0.0 {
        return Err(Error::UndampedOrTrapped);
    }
    Ok(ObservabilityReport {
        t_requested: t,
        t_used: rec.t,
        e0,
        e_at_t: rec.e,
        denom,
        ratio: e0 / denom,
        crosscheck: (denom - (e0 - rec.e)).abs(),
        k_aux,
    })
}

/// Predicted decay rate from an observability constant:
/// `lambda0 = ln(1 + 1/C) / T0`.
pub fn rate_from_observability(c_est: f64, t0: f64) -> Result<f64> {
    if !(c_est > 0.0) || !(t0 > 0.0) {
        return Err(Error::Fit(format!(
            "rate_from_observability needs positive inputs, got C = {c_est}, T0 = {t0}"
        )));
    }
    Ok((1.0 + 1.0 / c_est).ln() / t0)
}
