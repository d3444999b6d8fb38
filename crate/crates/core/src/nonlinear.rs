//! The nonlinearity `f`, its primitive `F`, the level-`k` truncations, and a
//! numerical validator for the structural assumptions (sign condition,
//! `f(0) = 0`, `0 <= F <= f s`, derivative growth, exponent ranges).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearKind {
    /// `f(s) = s|s|^(p-1)` (defocusing power).
    Power,
    /// `f(s) = s^3 / (1 + gamma s^2)` (bounded derivative).
    CubicLike,
    /// `f = 0` (linear problem).
    Zero,
}

/// A scalar nonlinearity together with its truncation level `k`
/// (`f64::INFINITY` leaves `f` untruncated).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearKind,
    /// Growth exponent `p >= 1` (power kind).
    pub p: f64,
    /// Growth constant in `|f^(j)(s)| <= k0 (1+|s|)^(p-j)`.
    pub k0: f64,
    /// Truncation level; values of `f` are frozen outside `[-k, k]`.
    pub k: f64,
    /// Scale of the cubic-like kind.
    pub gamma: f64,
}

impl Nonlinearity {
    pub fn power(p: f64, k: f64) -> Self {
        Nonlinearity {
            kind: NonlinearKind::Power,
            p,
            k0: p * (p - 1.0).max(1.0),
            k,
            gamma: 1.0,
        }
    }

    pub fn cubic_like(gamma: f64, k: f64) -> Self {
        // p = 1 growth; k0 must dominate both |f'| and |f''|(1+|s|),
        // f'' = 2s(3 - gamma s^2)/(1 + gamma s^2)^3
        let mut k0 = 0.0f64;
        for i in 0..=600 {
            let s = 10f64.powf(-3.0 + 6.0 * i as f64 / 600.0);
            let d = 1.0 + gamma * s * s;
            let fp = (3.0 * s * s + gamma * s.powi(4)) / (d * d);
            let fpp = (2.0 * s * (3.0 - gamma * s * s)).abs() / d.powi(3);
            k0 = k0.max(fp).max(fpp * (1.0 + s));
        }
        Nonlinearity {
            kind: NonlinearKind::CubicLike,
            p: 1.0,
            k0: k0 * 1.01,
            k,
            gamma,
        }
    }

    pub fn zero() -> Self {
        Nonlinearity {
            kind: NonlinearKind::Zero,
            p: 1.0,
            k0: 0.0,
            k: f64::INFINITY,
            gamma: 1.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, NonlinearKind::Zero)
    }

    fn f_raw(&self, s: f64) -> f64 {
        match self.kind {
            NonlinearKind::Power => s.signum() * s.abs().powf(self.p),
            NonlinearKind::CubicLike => s * s * s / (1.0 + self.gamma * s * s),
            NonlinearKind::Zero => 0.0,
        }
    }

    fn big_f_raw(&self, s: f64) -> f64 {
        match self.kind {
            NonlinearKind::Power => s.abs().powf(self.p + 1.0) / (self.p + 1.0),
            NonlinearKind::CubicLike => {
                let g = self.gamma;
                (s * s - (1.0 + g * s * s).ln() / g) / (2.0 * g)
            }
            NonlinearKind::Zero => 0.0,
        }
    }

    fn fprime_raw(&self, s: f64) -> f64 {
        match self.kind {
            NonlinearKind::Power => self.p * s.abs().powf(self.p - 1.0),
            NonlinearKind::CubicLike => {
                let s2 = s * s;
                let d = 1.0 + self.gamma * s2;
                (3.0 * s2 + self.gamma * s2 * s2) / (d * d)
            }
            NonlinearKind::Zero => 0.0,
        }
    }

    /// Truncated value `f_k(s)`: `f(s)` for `|s| <= k`, frozen beyond.
    pub fn eval_f(&self, s: f64) -> f64 {
        self.f_raw(s.clamp(-self.k, self.k))
    }

    /// Truncated primitive `F_k(s)`: `F(s)` inside, linear continuation beyond.
    pub fn eval_big_f(&self, s: f64) -> f64 {
        if s.abs() <= self.k {
            self.big_f_raw(s)
        } else if s > self.k {
            self.big_f_raw(self.k) + self.f_raw(self.k) * (s - self.k)
        } else {
            self.big_f_raw(-self.k) + self.f_raw(-self.k) * (s + self.k)
        }
    }

    /// `g_k(s)`: `f'(s)` for `|s| <= k`, zero beyond (the a.e. derivative of `f_k`).
    pub fn eval_fprime(&self, s: f64) -> f64 {
        if s.abs() <= self.k {
            self.fprime_raw(s)
        } else {
            0.0
        }
    }

    /// Global Lipschitz constant of `f_k`: `sup_{|s| <= k} |f'(s)|`.
    pub fn lipschitz_bound(&self) -> f64 {
        match self.kind {
            NonlinearKind::Zero => 0.0,
            // f' is even and nondecreasing in |s| on the power family
            NonlinearKind::Power => {
                if self.k.is_finite() {
                    self.fprime_raw(self.k)
                } else if self.p == 1.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            NonlinearKind::CubicLike => {
                let s_peak = (3.0 / self.gamma).sqrt();
                self.fprime_raw(self.k.min(s_peak))
            }
        }
    }

    /// `f'(0)` of the untruncated `f` (linearization at the origin).
    pub fn fprime_zero(&self) -> f64 {
        self.fprime_raw(0.0)
    }

    /// Secant (discrete-gradient) evaluation `(F_k(s1) - F_k(s0))/(s1 - s0)`,
    /// falling back to `f_k` at the midpoint for nearly-equal arguments.
    /// Satisfies `F_k(s1) - F_k(s0) = dg * (s1 - s0)` exactly, which is what
    /// makes the midpoint scheme's energy identity hold to solver tolerance.
    pub fn discrete_gradient(&self, s0: f64, s1: f64) -> f64 {
        let ds = s1 - s0;
        let scale = 1.0_f64.max(s0.abs()).max(s1.abs());
        if ds.abs() > 1e-8 * scale {
            (self.eval_big_f(s1) - self.eval_big_f(s0)) / ds
        } else {
            self.eval_f(0.5 * (s0 + s1))
        }
    }
}

/// Outcome of one structural-assumption check.
#[derive(Clone, Debug)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// A witnessing `s` when the check fails.
    pub witness: Option<f64>,
    pub detail: String,
}

/// Structured validation report; never an error.
#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    /// `1 <= p < n/(n-2)` (any `p >= 1` for n = 1, 2): range used by the
    /// decay theory.
    pub decay_range_ok: bool,
    /// `1 <= p <= (n+2)/(n-2)`: range used for well-posedness.
    pub wellposed_range_ok: bool,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.decay_range_ok && self.wellposed_range_ok
    }

    pub fn failures(&self) -> Vec<&AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Log-spaced sample points `±10^t`, `t` from -6 to 3, plus 0.
fn sample_points() -> Vec<f64> {
    let mut s = vec![0.0];
    let m = 121;
    for i in 0..m {
        let t = -6.0 + 9.0 * i as f64 / (m - 1) as f64;
        let v = 10f64.powf(t);
        s.push(v);
        s.push(-v);
    }
    s
}

/// Validate the assumptions for an arbitrary `(f, F)` pair (used directly by
/// tests with hypothetical nonlinearities; `validate_assumptions` wraps it).
pub fn validate_fn(
    f: &dyn Fn(f64) -> f64,
    big_f: &dyn Fn(f64) -> f64,
    p: f64,
    k0: f64,
    n_dim: usize,
) -> AssumptionReport {
    let samples = sample_points();
    let mut checks = Vec::new();

    // sign condition f(s) s >= 0
    let mut witness = None;
    for &s in &samples {
        if f(s) * s < -1e-12 * (1.0 + s.abs().powf(p + 1.0)) {
            witness = Some(s);
            break;
        }
    }
    checks.push(AssumptionCheck {
        name: "sign_condition",
        passed: witness.is_none(),
        witness,
        detail: "f(s) s >= 0 for all s".into(),
    });

    // f(0) = 0
    let f0 = f(0.0);
    checks.push(AssumptionCheck {
        name: "f_at_zero",
        passed: f0 == 0.0,
        witness: if f0 == 0.0 { None } else { Some(0.0) },
        detail: format!("f(0) = {f0}"),
    });

    // 0 <= F(s) <= f(s) s
    let mut witness = None;
    for &s in &samples {
        let fs = big_f(s);
        let bound = f(s) * s;
        let tol = 1e-12 * (1.0 + bound.abs());
        if fs < -tol || fs > bound + tol {
            witness = Some(s);
            break;
        }
    }
    checks.push(AssumptionCheck {
        name: "primitive_bounds",
        passed: witness.is_none(),
        witness,
        detail: "0 <= F(s) <= f(s) s".into(),
    });

    // |f'(s)| <= k0 (1+|s|)^{p-1}, finite differences
    let mut witness = None;
    for &s in &samples {
        let d = 1e-6 * 1.0_f64.max(s.abs());
        let fp = (f(s + d) - f(s - d)) / (2.0 * d);
        if fp.abs() > k0 * (1.0 + s.abs()).powf(p - 1.0) * (1.0 + 1e-6) + 1e-9 {
            witness = Some(s);
            break;
        }
    }
    checks.push(AssumptionCheck {
        name: "growth_fprime",
        passed: witness.is_none(),
        witness,
        detail: format!("|f'(s)| <= {k0} (1+|s|)^{}", p - 1.0),
    });

    // |f''(s)| <= k0 (1+|s|)^{p-2}, second finite differences
    let mut witness = None;
    for &s in &samples {
        let d = 1e-4 * 1.0_f64.max(s.abs());
        let fpp = (f(s + d) - 2.0 * f(s) + f(s - d)) / (d * d);
        if fpp.abs() > k0 * (1.0 + s.abs()).powf(p - 2.0) * (1.0 + 1e-4) + 1e-6 {
            witness = Some(s);
            break;
        }
    }
    checks.push(AssumptionCheck {
        name: "growth_fsecond",
        passed: witness.is_none(),
        witness,
        detail: format!("|f''(s)| <= {k0} (1+|s|)^{}", p - 2.0),
    });

    let p_ok = p >= 1.0;
    let (decay_range_ok, wellposed_range_ok) = if n_dim <= 2 {
        (p_ok, p_ok)
    } else {
        let n = n_dim as f64;
        (
            p_ok && p < n / (n - 2.0),
            p_ok && p <= (n + 2.0) / (n - 2.0),
        )
    };
    checks.push(AssumptionCheck {
        name: "exponent_range_decay",
        passed: decay_range_ok,
        witness: None,
        detail: if n_dim <= 2 {
            format!("p = {p} >= 1 (no upper bound for n = {n_dim})")
        } else {
            format!(
                "decay theory needs 1 <= p < n/(n-2) = {}, got p = {p}",
                n_dim as f64 / (n_dim as f64 - 2.0)
            )
        },
    });
    checks.push(AssumptionCheck {
        name: "exponent_range_wellposed",
        passed: wellposed_range_ok,
        witness: None,
        detail: if n_dim <= 2 {
            format!("p = {p} >= 1")
        } else {
            format!(
                "well-posedness needs 1 <= p <= (n+2)/(n-2) = {}, got p = {p}",
                (n_dim as f64 + 2.0) / (n_dim as f64 - 2.0)
            )
        },
    });

    AssumptionReport {
        checks,
        decay_range_ok,
        wellposed_range_ok,
    }
}

/// Numerically check the structural assumptions of `nl` (untruncated `f`)
/// against dimension `n_dim`. Returns a structured report, never an error.
pub fn validate_assumptions(nl: &Nonlinearity, n_dim: usize) -> AssumptionReport {
    let raw = Nonlinearity {
        k: f64::INFINITY,
        ..*nl
    };
    validate_fn(
        &|s| raw.f_raw(s),
        &|s| raw.big_f_raw(s),
        nl.p,
        nl.k0,
        n_dim,
    )
}

/// Reject nonlinearities outside the decay exponent range (used by config
/// validation; the experiments all target the decay theory).
pub fn require_decay_range(p: f64, n_dim: usize) -> Result<()> {
    if p < 1.0 {
        return Err(Error::Validation(vec![format!(
            "nonlinearity exponent p = {p} violates p >= 1"
        )]));
    }
    if n_dim >= 3 {
        let bound = n_dim as f64 / (n_dim as f64 - 2.0);
        if p >= bound {
            return Err(Error::Validation(vec![format!(
                "nonlinearity exponent p = {p} violates the decay range 1 <= p < n/(n-2) = {bound} for n = {n_dim}"
            )]));
        }
    }
    Ok(())
}
