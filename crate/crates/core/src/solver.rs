//! Implicit-midpoint time integration of the first-order system
//! `u' = v`, `rho v' = -L_h u - L_a v - (1/k_aux) b v - rho f_k(u)`.
//!
//! One step solves for `w = v+` via damped Newton on the reduced residual
//! (the `u`-update `u+ = u + dt*(v + w)/2` is eliminated exactly). The
//! nonlinearity enters through the discrete gradient of `F_k`, so the
//! discrete energy identity holds to solver tolerance, not just O(dt^2).

use crate::analysis::{self, EnergyRecord};
use crate::error::{Error, Result};
use crate::geometry::{CoefficientField, Grid};
use crate::linalg::SymBanded;
use crate::nonlinear::Nonlinearity;
use crate::operator::{assemble, DiscreteOperator, FluxOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Nodal state at time `t`; boundary values are implicitly zero.
#[derive(Clone, Debug)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn new(t: f64, u: Vec<f64>, v: Vec<f64>) -> Self {
        State { t, u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

/// Time-stepping parameters. `k_aux = inf` removes the frictional term,
/// which is the original (non-regularized) problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub k_aux: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub record_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            t_end: 1.0,
            k_aux: f64::INFINITY,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            record_stride: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0) {
            errs.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0) {
            errs.push(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if !(self.k_aux > 0.0) {
            errs.push(format!("k_aux must be positive (or inf), got {}", self.k_aux));
        }
        if !(self.newton_tol > 0.0) {
            errs.push("newton_tol must be positive".into());
        }
        if self.newton_max_iter == 0 {
            errs.push("newton_max_iter must be >= 1".into());
        }
        if self.record_stride == 0 {
            errs.push("record_stride must be >= 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn friction_scale(&self) -> f64 {
        if self.k_aux.is_finite() {
            1.0 / self.k_aux
        } else {
            0.0
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Result of a single accepted step.
pub struct StepResult {
    pub state: State,
    /// `dt * <L_a v_m, v_m> * cellvol` — the Kelvin-Voigt dissipation of this step.
    pub diss_kv: f64,
    /// `dt * (1/k) <b v_m, v_m> * cellvol`.
    pub diss_fric: f64,
    pub newton_iters: usize,
}

/// Reusable stepping context: the constant part of the Jacobian is
/// pre-assembled once and only the nonlinear diagonal is refreshed per
/// Newton iteration.
pub struct Stepper<'a> {
    op: &'a DiscreteOperator,
    nl: &'a Nonlinearity,
    dt: f64,
    kinv: f64,
    tol: f64,
    max_iter: usize,
    base: SymBanded,
    jac: SymBanded,
    // scratch
    w: Vec<f64>,
    w_try: Vec<f64>,
    u_plus: Vec<f64>,
    u_mid: Vec<f64>,
    v_mid: Vec<f64>,
    resid: Vec<f64>,
    delta: Vec<f64>,
    lu: Vec<f64>,
    step_index: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(op: &'a DiscreteOperator, nl: &'a Nonlinearity, cfg: &SolverConfig) -> Self {
        let n = op.n_nodes();
        let dt = cfg.dt;
        let kinv = cfg.friction_scale();
        let mut base = SymBanded::zeros(n, op.bandwidth());
        op.stiffness.add_to_banded(dt * dt / 4.0, &mut base);
        op.viscosity.add_to_banded(dt / 2.0, &mut base);
        for i in 0..n {
            base.add_diag(i, op.mass[i] + dt / 2.0 * kinv * op.friction[i]);
        }
        let jac = base.clone();
        Stepper {
            op,
            nl,
            dt,
            kinv,
            tol: cfg.newton_tol,
            max_iter: cfg.newton_max_iter,
            base,
            jac,
            w: vec![0.0; n],
            w_try: vec![0.0; n],
            u_plus: vec![0.0; n],
            u_mid: vec![0.0; n],
            v_mid: vec![0.0; n],
            resid: vec![0.0; n],
            delta: vec![0.0; n],
            lu: vec![0.0; n],
            step_index: 0,
        }
    }

    pub fn set_step_index(&mut self, idx: usize) {
        self.step_index = idx;
    }

    /// Residual of the reduced midpoint system at velocity guess `w`,
    /// filling the midpoint scratch fields. Returns the max norm.
    fn residual(&mut self, state: &State, w: &[f64]) -> f64 {
        let n = self.op.n_nodes();
        let (u, v) = (&state.u, &state.v);
        for i in 0..n {
            self.v_mid[i] = 0.5 * (v[i] + w[i]);
            self.u_plus[i] = u[i] + self.dt * self.v_mid[i];
            self.u_mid[i] = 0.5 * (u[i] + self.u_plus[i]);
        }
        self.op.stiffness.apply(&self.u_mid, &mut self.resid);
        self.op.viscosity.apply(&self.v_mid, &mut self.lu);
        let mut norm = 0.0f64;
        for i in 0..n {
            let fbar = self.nl.discrete_gradient(u[i], self.u_plus[i]);
            let r = self.op.mass[i] * (w[i] - v[i])
                + self.dt
                    * (self.resid[i]
                        + self.lu[i]
                        + self.kinv * self.op.friction[i] * self.v_mid[i]
                        + self.op.mass[i] * fbar);
            self.resid[i] = r;
            norm = norm.max(r.abs());
        }
        norm
    }

    /// Advance one step from `state` (time `state.t` to `state.t + dt`).
    pub fn step(&mut self, state: &State) -> Result<StepResult> {
        let n = self.op.n_nodes();
        self.w.copy_from_slice(&state.v);
        let mut res_norm = self.residual_into_w_scratch(state);
        let mut iters = 0usize;
        let mut polished = false;

        loop {
            if !res_norm.is_finite() {
                return Err(Error::NonFinite {
                    step: self.step_index,
                });
            }
            if res_norm <= self.tol {
                if polished {
                    break;
                }
                polished = true; // one extra iteration sharpens the residual to ~eps
            }
            if iters >= self.max_iter {
                return Err(Error::NewtonDiverged {
                    step: self.step_index,
                    t: state.t,
                    residual: res_norm,
                    iters,
                });
            }
            // Jacobian: base + (dt^2/4) * diag(rho * g_k(u_mid))
            self.jac.copy_from(&self.base);
            for i in 0..n {
                self.jac.add_diag(
                    i,
                    self.dt * self.dt / 4.0 * self.op.mass[i] * self.nl.eval_fprime(self.u_mid[i]),
                );
            }
            if self.jac.cholesky_in_place().is_err() {
                return Err(Error::NewtonDiverged {
                    step: self.step_index,
                    t: state.t,
                    residual: res_norm,
                    iters,
                });
            }
            self.delta.copy_from_slice(&self.resid);
            self.jac.solve_in_place(&mut self.delta);

            // damped update: halve up to 5 times while the residual grows
            let mut scale = 1.0;
            let mut accepted = res_norm;
            for attempt in 0..=5 {
                for i in 0..n {
                    self.w_try[i] = self.w[i] - scale * self.delta[i];
                }
                let try_norm = {
                    let w_try = std::mem::take(&mut self.w_try);
                    let norm = self.residual(state, &w_try);
                    self.w_try = w_try;
                    norm
                };
                if try_norm <= res_norm || attempt == 5 {
                    accepted = try_norm;
                    break;
                }
                scale *= 0.5;
            }
            std::mem::swap(&mut self.w, &mut self.w_try);
            // scratch fields correspond to the last tried w, which is now self.w
            res_norm = accepted;
            iters += 1;
        }

        // dissipation of this step, with the same midpoint quadrature the
        // scheme removes from the energy
        let cv = self.op.cell_volume();
        let diss_kv = self.dt * self.op.viscosity.quadratic_form(&self.v_mid) * cv;
        let diss_fric = self.dt * self.kinv * self.op.friction_form(&self.v_mid, &self.v_mid) * cv;

        let next = State::new(state.t + self.dt, self.u_plus.clone(), self.w.clone());
        if !next.is_finite() {
            return Err(Error::NonFinite {
                step: self.step_index,
            });
        }
        Ok(StepResult {
            state: next,
            diss_kv,
            diss_fric,
            newton_iters: iters,
        })
    }

    fn residual_into_w_scratch(&mut self, state: &State) -> f64 {
        let w = std::mem::take(&mut self.w);
        let norm = self.residual(state, &w);
        self.w = w;
        norm
    }
}

/// One implicit-midpoint step (convenience wrapper over `Stepper`).
pub fn step(
    state: &State,
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    cfg: &SolverConfig,
) -> Result<State> {
    let mut stepper = Stepper::new(op, nl, cfg);
    Ok(stepper.step(state)?.state)
}

/// A computed trajectory: energy records at the record stride (cumulative
/// dissipation accumulated every step) plus the matching states.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<EnergyRecord>,
    pub states: Vec<State>,
    pub cell_volume: f64,
    pub k_aux: f64,
    pub total_newton_iters: usize,
}

impl Trajectory {
    pub fn initial_energy(&self) -> f64 {
        self.records[0].e
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().expect("nonempty").e
    }
}

/// Integrate from `t = 0` to `t_end` (rounded to a whole number of steps),
/// recording every `record_stride` steps and at the final time.
pub fn run(
    grid: &Grid,
    coeffs: &CoefficientField,
    nl: &Nonlinearity,
    u0: &[f64],
    v0: &[f64],
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let op = assemble(grid, coeffs)?;
    run_assembled(&op, nl, u0, v0, cfg)
}

/// `run` with a pre-assembled operator (ensembles reuse the assembly).
pub fn run_assembled(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    u0: &[f64],
    v0: &[f64],
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let n = op.n_nodes();
    if u0.len() != n || v0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial data has {} / {} entries, operator has {n} nodes",
            u0.len(),
            v0.len()
        )));
    }
    let state0 = State::new(0.0, u0.to_vec(), v0.to_vec());
    if !state0.is_finite() {
        return Err(Error::InitialData("initial data must be finite".into()));
    }

    let mut records = Vec::new();
    let mut states = Vec::new();
    let mut cum_kv = 0.0;
    let mut cum_fric = 0.0;
    let rec0 = analysis::energy(&state0, op, nl);
    let e0 = rec0.e;
    records.push(rec0);
    states.push(state0.clone());

    let n_steps = cfg.n_steps();
    let mut stepper = Stepper::new(op, nl, cfg);
    let mut state = state0;
    let mut total_iters = 0usize;
    for step_idx in 0..n_steps {
        stepper.set_step_index(step_idx);
        let result = stepper.step(&state)?;
        cum_kv += result.diss_kv;
        cum_fric += result.diss_fric;
        total_iters += result.newton_iters;
        state = result.state;
        state.t = (step_idx + 1) as f64 * cfg.dt;
        if (step_idx + 1) % cfg.record_stride == 0 || step_idx + 1 == n_steps {
            let mut rec = analysis::energy(&state, op, nl);
            rec.cum_diss_kv = cum_kv;
            rec.cum_diss_fric = cum_fric;
            rec.identity_residual = rec.e - e0 + cum_kv + cum_fric;
            records.push(rec);
            states.push(state.clone());
        }
    }
    Ok(Trajectory {
        records,
        states,
        cell_volume: op.cell_volume(),
        k_aux: cfg.k_aux,
        total_newton_iters: total_iters,
    })
}

/// Initial data kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialData {
    /// Product of sine eigenmodes, one index per axis; `v0 = 0`.
    Eigenmode { mode: Vec<usize> },
    /// Gaussian bump, clipped by the Dirichlet boundary and scaled so the
    /// peak nodal value is `amplitude`; `v0 = 0`.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    /// Random low-mode data with prescribed discrete `H^1_0 x L^2` norm.
    /// Coefficients of mode `j` scale like `N(0,1)/j` for both `u0` and `v0`.
    RandomH1 { seed: u64, norm: f64, modes: usize },
}

fn mode_shape(grid: &Grid, mode: &[usize], node: usize) -> f64 {
    let x = grid.coord(node);
    let mut val = 1.0;
    for ax in 0..grid.dim() {
        val *= (mode[ax] as f64 * std::f64::consts::PI * x[ax] / grid.lengths()[ax]).sin();
    }
    val
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on the half-open unit interval
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Build `(u0, v0)` for a named kind. Random data are deterministic in the
/// seed; the `H^1_0 x L^2` norm uses the unit-coefficient stiffness form.
pub fn initial_data(grid: &Grid, kind: &InitialData) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = grid.n_nodes();
    match kind {
        InitialData::Eigenmode { mode } => {
            if mode.len() != grid.dim() {
                return Err(Error::InitialData(format!(
                    "eigenmode needs {} indices, got {}",
                    grid.dim(),
                    mode.len()
                )));
            }
            for (ax, &j) in mode.iter().enumerate() {
                if j == 0 || j > grid.counts()[ax] {
                    return Err(Error::InitialData(format!(
                        "eigenmode index {j} out of range 1..={} on axis {ax}",
                        grid.counts()[ax]
                    )));
                }
            }
            let u0 = (0..n).map(|i| mode_shape(grid, mode, i)).collect();
            Ok((u0, vec![0.0; n]))
        }
        InitialData::Gaussian {
            center,
            width,
            amplitude,
        } => {
            if center.len() != grid.dim() {
                return Err(Error::InitialData("gaussian center dimension".into()));
            }
            if !(*width > 0.0) {
                return Err(Error::InitialData("gaussian width must be positive".into()));
            }
            let mut u0: Vec<f64> = (0..n)
                .map(|i| {
                    let x = grid.coord(i);
                    let r2: f64 = (0..grid.dim())
                        .map(|ax| (x[ax] - center[ax]).powi(2))
                        .sum();
                    (-r2 / (2.0 * width * width)).exp()
                })
                .collect();
            let peak = u0.iter().cloned().fold(0.0, f64::max);
            if peak > 0.0 {
                let s = amplitude / peak;
                u0.iter_mut().for_each(|x| *x *= s);
            }
            Ok((u0, vec![0.0; n]))
        }
        InitialData::RandomH1 { seed, norm, modes } => {
            if !(*norm > 0.0) {
                return Err(Error::InitialData("norm must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut u0 = vec![0.0; n];
            let mut v0 = vec![0.0; n];
            let m_per_axis = (*modes).min(grid.counts().iter().cloned().min().unwrap());
            let mode_list: Vec<Vec<usize>> = match grid.dim() {
                1 => (1..=m_per_axis).map(|j| vec![j]).collect(),
                _ => {
                    let m2 = (m_per_axis as f64).sqrt().ceil() as usize;
                    let mut list = Vec::new();
                    for j1 in 1..=m2 {
                        for j2 in 1..=m2 {
                            list.push(vec![j1, j2]);
                        }
                    }
                    list
                }
            };
            for mode in &mode_list {
                let weight = 1.0 / mode.iter().sum::<usize>() as f64 * mode.len() as f64;
                let cu = standard_normal(&mut rng) * weight;
                let cv = standard_normal(&mut rng) * weight;
                for i in 0..n {
                    let phi = mode_shape(grid, mode, i);
                    u0[i] += cu * phi;
                    v0[i] += cv * phi;
                }
            }
            let stiff = FluxOperator::unit(grid);
            let cv = grid.cell_volume();
            let nrm2 = stiff.quadratic_form(&u0) * cv
                + v0.iter().map(|x| x * x).sum::<f64>() * cv;
            let s = norm / nrm2.sqrt();
            u0.iter_mut().for_each(|x| *x *= s);
            v0.iter_mut().for_each(|x| *x *= s);
            Ok((u0, v0))
        }
    }
}

/// Discrete `H^1_0 x L^2` distance between two states, built from the same
/// stiffness and mass forms as the energy.
pub fn h1l2_distance(op: &DiscreteOperator, a: &State, b: &State) -> f64 {
    let n = op.n_nodes();
    let du: Vec<f64> = (0..n).map(|i| a.u[i] - b.u[i]).collect();
    let dv: Vec<f64> = (0..n).map(|i| a.v[i] - b.v[i]).collect();
    let cv = op.cell_volume();
    (op.stiffness.quadratic_form(&du) * cv + op.mass_form(&dv, &dv) * cv).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_damping_preset, build_grid, DampingPreset, PresetParams};
    use crate::nonlinear::Nonlinearity;

    fn preset(
        grid: &Grid,
        preset: DampingPreset,
        a0: f64,
        b0: f64,
    ) -> crate::geometry::CoefficientField {
        build_damping_preset(
            grid,
            &preset,
            &PresetParams {
                a0,
                b0,
                eps: 0.1,
                ramp: Some(0.05),
            },
        )
        .unwrap()
        .1
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = build_grid(1, &[1.0], &[20]).unwrap();
        let field = preset(
            &g,
            DampingPreset::Interval1d {
                a_start: 0.4,
                a_end: 0.6,
            },
            1.0,
            1.0,
        );
        let nl = Nonlinearity::power(3.0, 10.0);
        let cfg = SolverConfig {
            dt: 0.01,
            t_end: 0.1,
            ..Default::default()
        };
        let traj = run(&g, &field, &nl, &vec![0.0; 20], &vec![0.0; 20], &cfg).unwrap();
        assert!(traj.final_energy() == 0.0);
        assert!(traj.states.last().unwrap().u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn t_end_zero_gives_single_record() {
        let g = build_grid(1, &[1.0], &[20]).unwrap();
        let field = preset(
            &g,
            DampingPreset::Undamped,
            0.0,
            0.0,
        );
        let (u0, v0) = initial_data(&g, &InitialData::Eigenmode { mode: vec![1] }).unwrap();
        let cfg = SolverConfig {
            dt: 0.01,
            t_end: 0.0,
            ..Default::default()
        };
        let traj = run(&g, &field, &Nonlinearity::zero(), &u0, &v0, &cfg).unwrap();
        assert_eq!(traj.records.len(), 1);
        assert!(traj.records[0].e > 0.0);
    }

    #[test]
    fn undamped_linear_eigenmode_conserves_energy() {
        let g = build_grid(1, &[1.0], &[100]).unwrap();
        let field = preset(&g, DampingPreset::Undamped, 0.0, 0.0);
        let (u0, v0) = initial_data(&g, &InitialData::Eigenmode { mode: vec![1] }).unwrap();
        let cfg = SolverConfig {
            dt: 0.01,
            t_end: 2.0,
            record_stride: 10,
            ..Default::default()
        };
        let traj = run(&g, &field, &Nonlinearity::zero(), &u0, &v0, &cfg).unwrap();
        let e0 = traj.initial_energy();
        for pair in traj.records.windows(2) {
            let drift = (pair[1].e - pair[0].e).abs();
            // midpoint conserves the quadratic energy to solver tolerance;
            // stride of 10 steps allows 10 leaks of ~tol each
            assert!(drift < 1e-10 * e0, "per-record drift {drift:e}");
        }
    }

    #[test]
    fn constant_damping_strictly_decreases_energy() {
        let g = build_grid(1, &[1.0], &[60]).unwrap();
        let field = preset(&g, DampingPreset::Constant, 0.5, 0.0);
        let (u0, v0) = initial_data(&g, &InitialData::Eigenmode { mode: vec![2] }).unwrap();
        let cfg = SolverConfig {
            dt: 0.005,
            t_end: 1.0,
            ..Default::default()
        };
        let traj = run(&g, &field, &Nonlinearity::zero(), &u0, &v0, &cfg).unwrap();
        for pair in traj.records.windows(2) {
            assert!(pair[1].e < pair[0].e, "energy must strictly decrease");
        }
    }

    #[test]
    fn auxiliary_term_vanishes_as_k_grows() {
        let g = build_grid(1, &[1.0], &[60]).unwrap();
        let field = preset(
            &g,
            DampingPreset::Interval1d {
                a_start: 0.4,
                a_end: 0.6,
            },
            1.0,
            1.0,
        );
        let (u0, v0) = initial_data(
            &g,
            &InitialData::RandomH1 {
                seed: 3,
                norm: 1.0,
                modes: 8,
            },
        )
        .unwrap();
        let nl = Nonlinearity::power(3.0, 10.0);
        let t_end = 1.0;
        let mk_cfg = |k: f64| SolverConfig {
            dt: 2e-3,
            t_end,
            k_aux: k,
            record_stride: 50,
            ..Default::default()
        };
        let t_inf = run(&g, &field, &nl, &u0, &v0, &mk_cfg(f64::INFINITY)).unwrap();
        let t_big = run(&g, &field, &nl, &u0, &v0, &mk_cfg(1e6)).unwrap();
        let op = assemble(&g, &field).unwrap();
        let dist = t_inf
            .states
            .iter()
            .zip(&t_big.states)
            .map(|(a, b)| h1l2_distance(&op, a, b))
            .fold(0.0, f64::max);
        assert!(
            dist < 5.0 * 1e-6 * t_end && dist > 0.0,
            "k = 1e6 must differ from k = inf by O(1e-6 T), got {dist:e}"
        );
    }

    #[test]
    fn odd_nonlinearity_gives_odd_trajectories() {
        let g = build_grid(1, &[1.0], &[40]).unwrap();
        let field = preset(
            &g,
            DampingPreset::Interval1d {
                a_start: 0.4,
                a_end: 0.6,
            },
            1.0,
            1.0,
        );
        let (u0, v0) = initial_data(
            &g,
            &InitialData::RandomH1 {
                seed: 11,
                norm: 1.0,
                modes: 6,
            },
        )
        .unwrap();
        let nl = Nonlinearity::power(3.0, 5.0);
        let cfg = SolverConfig {
            dt: 5e-3,
            t_end: 0.5,
            k_aux: 50.0,
            record_stride: 20,
            ..Default::default()
        };
        let plus = run(&g, &field, &nl, &u0, &v0, &cfg).unwrap();
        let neg_u: Vec<f64> = u0.iter().map(|x| -x).collect();
        let neg_v: Vec<f64> = v0.iter().map(|x| -x).collect();
        let minus = run(&g, &field, &nl, &neg_u, &neg_v, &cfg).unwrap();
        for (a, b) in plus.states.iter().zip(&minus.states) {
            for (x, y) in a.u.iter().zip(&b.u) {
                assert!((x + y).abs() < 1e-9, "trajectory must negate");
            }
        }
    }

    #[test]
    fn newton_divergence_is_reported() {
        let g = build_grid(1, &[1.0], &[30]).unwrap();
        let field = preset(&g, DampingPreset::Constant, 1.0, 0.0);
        let (mut u0, v0) = initial_data(&g, &InitialData::Eigenmode { mode: vec![1] }).unwrap();
        for x in &mut u0 {
            *x *= 3e7;
        }
        let nl = Nonlinearity::power(3.0, f64::INFINITY);
        let cfg = SolverConfig {
            dt: 1e3,
            t_end: 2e3,
            ..Default::default()
        };
        match run(&g, &field, &nl, &u0, &v0, &cfg) {
            Err(Error::NewtonDiverged { step, .. }) => assert_eq!(step, 0),
            Err(Error::NonFinite { .. }) => {}
            other => panic!("expected solver failure, got {other:?}"),
        }
    }

    #[test]
    fn eigenmode_and_gaussian_initial_data() {
        let g = build_grid(1, &[1.0], &[99]).unwrap();
        let (u0, v0) = initial_data(&g, &InitialData::Eigenmode { mode: vec![1] }).unwrap();
        assert!(v0.iter().all(|&x| x == 0.0));
        let x25 = g.coord(24)[0];
        assert!((u0[24] - (std::f64::consts::PI * x25).sin()).abs() < 1e-12);
        assert!(initial_data(&g, &InitialData::Eigenmode { mode: vec![0] }).is_err());
        assert!(initial_data(&g, &InitialData::Eigenmode { mode: vec![100] }).is_err());

        // boundary-centered gaussian is clipped (boundary values are implicit
        // zeros) and rescaled to the requested peak
        let (u0, _) = initial_data(
            &g,
            &InitialData::Gaussian {
                center: vec![0.0],
                width: 0.1,
                amplitude: 2.0,
            },
        )
        .unwrap();
        let peak = u0.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_h1_data_is_normalized_and_deterministic() {
        let g = build_grid(1, &[1.0], &[80]).unwrap();
        let kind = InitialData::RandomH1 {
            seed: 7,
            norm: 1.0,
            modes: 16,
        };
        let (u0, v0) = initial_data(&g, &kind).unwrap();
        let stiff = FluxOperator::unit(&g);
        let cv = g.cell_volume();
        let nrm =
            (stiff.quadratic_form(&u0) * cv + v0.iter().map(|x| x * x).sum::<f64>() * cv).sqrt();
        assert!((nrm - 1.0).abs() < 1e-12, "norm {nrm}");
        let (u1, v1) = initial_data(&g, &kind).unwrap();
        assert_eq!(u0, u1);
        assert_eq!(v0, v1);
    }
}
