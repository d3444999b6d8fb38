//! Dense spectra of the linearized first-order generator
//! `[[0, I], [-(rho^{-1} L_h + f'(0) I), -rho^{-1}(L_a + (1/k) diag b)]]`
//! and the branch diagnostics connecting decay rates to the spectral
//! abscissa, including the non-uniform-decay signature of discontinuous
//! Kelvin-Voigt coefficients.

use crate::error::{Error, Result};
use crate::geometry::{CoefficientField, Grid};
use crate::nonlinear::Nonlinearity;
use crate::operator::{assemble, DiscreteOperator};
use nalgebra::{Complex, DMatrix};

/// Guard for dense eigenanalysis, in grid nodes (the generator is `2n x 2n`).
pub const DENSE_SIZE_GUARD: usize = 2000;

/// One matched spectral branch.
#[derive(Clone, Copy, Debug)]
pub struct Branch {
    /// Branch index (1-based).
    pub j: usize,
    /// Target angular frequency the branch was matched against.
    pub target_omega: f64,
    pub re: f64,
    pub im: f64,
}

/// Eigenvalues sorted by `|Im|`, the spectral abscissa, and the matched
/// low-frequency branches.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub abscissa: f64,
    pub branches: Vec<Branch>,
}

/// Assemble the dense generator of the linearization at the origin.
/// Guarded by `DENSE_SIZE_GUARD` nodes unless `allow_large`.
pub fn assemble_generator(
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    k_aux: f64,
    allow_large: bool,
) -> Result<DMatrix<f64>> {
    let n = op.n_nodes();
    if n > DENSE_SIZE_GUARD && !allow_large {
        return Err(Error::SizeGuard {
            n,
            guard: DENSE_SIZE_GUARD,
        });
    }
    let kinv = if k_aux.is_finite() { 1.0 / k_aux } else { 0.0 };
    let fp0 = nl.fprime_zero();
    let lh = op.stiffness.to_dense();
    let la = op.viscosity.to_dense();
    let mut gen = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        gen[(i, n + i)] = 1.0;
        let ri = 1.0 / op.mass[i];
        for j in 0..n {
            gen[(n + i, j)] = -ri * lh[(i, j)];
            gen[(n + i, n + j)] = -ri * la[(i, j)];
        }
        gen[(n + i, i)] -= fp0;
        gen[(n + i, n + i)] -= ri * kinv * op.friction[i];
    }
    Ok(gen)
}

/// All eigenvalues of a dense real matrix, sorted by `(|Im|, -Re, Im)`.
pub fn spectrum(matrix: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = matrix.nrows();
    let schur = nalgebra::linalg::Schur::try_new(matrix.clone(), 1e-14, 200 * n.max(10))
        .ok_or(Error::EigenNoConvergence)?;
    let mut eigs: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().cloned().collect();
    eigs.sort_by(|a, b| {
        (a.im.abs(), -a.re, a.im)
            .partial_cmp(&(b.im.abs(), -b.re, b.im))
            .expect("finite eigenvalues")
    });
    Ok(eigs)
}

/// Spectral abscissa `max Re`.
pub fn abscissa(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Discrete undamped angular frequencies `sqrt(mu_j)` of the grid Laplacian
/// (unit coefficients), ascending, at most `m` of them.
pub fn undamped_frequencies(grid: &Grid, m: usize) -> Vec<f64> {
    let mut mus = Vec::new();
    match grid.dim() {
        1 => {
            let h = grid.spacings()[0];
            let l = grid.lengths()[0];
            for j in 1..=grid.counts()[0] {
                let s = (j as f64 * std::f64::consts::PI * h / (2.0 * l)).sin();
                mus.push(4.0 / (h * h) * s * s);
            }
        }
        _ => {
            for j1 in 1..=grid.counts()[0] {
                for j2 in 1..=grid.counts()[1] {
                    let mut mu = 0.0;
                    for (ax, &j) in [j1, j2].iter().enumerate() {
                        let h = grid.spacings()[ax];
                        let l = grid.lengths()[ax];
                        let s = (j as f64 * std::f64::consts::PI * h / (2.0 * l)).sin();
                        mu += 4.0 / (h * h) * s * s;
                    }
                    mus.push(mu);
                }
            }
        }
    }
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    mus.truncate(m);
    mus.iter().map(|mu| mu.sqrt()).collect()
}

/// Match the `m` lowest branches against target frequencies: ascending `j`,
/// greedy nearest `|Im - target|` with ties broken by smallest `|Re|`, each
/// eigenvalue claimed at most once, positive-frequency half only.
pub fn match_branches(
    eigs: &[Complex<f64>],
    targets: &[f64],
) -> Result<Vec<Branch>> {
    let mut pool: Vec<Complex<f64>> = eigs.iter().filter(|z| z.im > 0.0).cloned().collect();
    let mut out = Vec::with_capacity(targets.len());
    for (idx, &target) in targets.iter().enumerate() {
        if pool.is_empty() {
            return Err(Error::Spectral(format!(
                "only {} oscillatory eigenvalue pairs available for {} branches",
                idx,
                targets.len()
            )));
        }
        let best = pool
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                ((a.im - target).abs(), a.re.abs())
                    .partial_cmp(&((b.im - target).abs(), b.re.abs()))
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        let z = pool.swap_remove(best);
        out.push(Branch {
            j: idx + 1,
            target_omega: target,
            re: z.re,
            im: z.im,
        });
    }
    Ok(out)
}

/// Full spectrum report with branches matched against the grid's undamped
/// frequencies.
pub fn spectrum_report(
    grid: &Grid,
    op: &DiscreteOperator,
    nl: &Nonlinearity,
    k_aux: f64,
    m_branches: usize,
    allow_large: bool,
) -> Result<SpectrumReport> {
    let gen = assemble_generator(op, nl, k_aux, allow_large)?;
    let eigs = spectrum(&gen)?;
    let targets = undamped_frequencies(grid, m_branches);
    let branches = match_branches(&eigs, &targets).unwrap_or_default();
    let abscissa = abscissa(&eigs);
    Ok(SpectrumReport {
        eigenvalues: eigs,
        abscissa,
        branches,
    })
}

/// Non-uniform-decay diagnostic: spectrum of the linear generator for a given
/// 1D damping field, branches matched against `j pi / L`, `j = 1..=m`.
///
/// For a discontinuous (indicator) field the matched `|Re|` sequence trends
/// to zero as `j` grows; a continuous ramped field keeps it bounded away.
pub fn liu_liu_diagnostic(
    grid: &Grid,
    field: &CoefficientField,
    m: usize,
) -> Result<Vec<Branch>> {
    if grid.dim() != 1 {
        return Err(Error::Spectral("liu_liu_diagnostic is 1D only".into()));
    }
    let op = assemble(grid, field)?;
    let gen = assemble_generator(&op, &Nonlinearity::zero(), f64::INFINITY, false)?;
    let eigs = spectrum(&gen)?;
    let l = grid.lengths()[0];
    let targets: Vec<f64> = (1..=m)
        .map(|j| j as f64 * std::f64::consts::PI / l)
        .collect();
    match_branches(&eigs, &targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        build_damping_preset, build_grid, support_interval_field, DampingPreset, PresetParams,
    };

    fn constant_op(n: usize, a0: f64) -> (Grid, DiscreteOperator) {
        let g = build_grid(1, &[1.0], &[n]).unwrap();
        let preset = if a0 == 0.0 {
            DampingPreset::Undamped
        } else {
            DampingPreset::Constant
        };
        let (_, field) = build_damping_preset(
            &g,
            &preset,
            &PresetParams {
                a0,
                b0: 0.0,
                eps: 0.1,
                ramp: None,
            },
        )
        .unwrap();
        let op = assemble(&g, &field).unwrap();
        (g, op)
    }

    #[test]
    fn undamped_spectrum_is_skew_with_laplacian_frequencies() {
        let (g, op) = constant_op(40, 0.0);
        let gen = assemble_generator(&op, &Nonlinearity::zero(), f64::INFINITY, false).unwrap();
        let eigs = spectrum(&gen).unwrap();
        assert!(abscissa(&eigs).abs() < 1e-8);
        let freqs = undamped_frequencies(&g, 40);
        // every +-i sqrt(mu_j) must appear
        for &w in &freqs {
            let best = eigs
                .iter()
                .map(|z| (z - Complex::new(0.0, w)).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-6 * w.max(1.0), "frequency {w}: offset {best:e}");
        }
    }

    #[test]
    fn constant_damping_matches_per_mode_quadratic() {
        // lambda = (-c mu +- sqrt(c^2 mu^2 - 4 mu)) / 2 per discrete mode
        let c = 1.0;
        let (g, op) = constant_op(100, c);
        let gen = assemble_generator(&op, &Nonlinearity::zero(), f64::INFINITY, false).unwrap();
        let mut eigs = spectrum(&gen).unwrap();
        let mut exact: Vec<Complex<f64>> = Vec::new();
        for w in undamped_frequencies(&g, 100) {
            let mu = w * w;
            let disc = c * c * mu * mu - 4.0 * mu;
            if disc >= 0.0 {
                exact.push(Complex::new((-c * mu + disc.sqrt()) / 2.0, 0.0));
                exact.push(Complex::new((-c * mu - disc.sqrt()) / 2.0, 0.0));
            } else {
                let im = (-disc).sqrt() / 2.0;
                exact.push(Complex::new(-c * mu / 2.0, im));
                exact.push(Complex::new(-c * mu / 2.0, -im));
            }
        }
        let mut worst = 0.0f64;
        for lam in exact {
            let (idx, dist) = eigs
                .iter()
                .enumerate()
                .map(|(i, z)| (i, (z - lam).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            worst = worst.max(dist / lam.norm().max(1.0));
            eigs.swap_remove(idx);
        }
        assert!(worst < 1e-6, "relative eigenvalue error {worst:e}");
    }

    #[test]
    fn diagonal_matrix_abscissa() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0]));
        let eigs = spectrum(&m).unwrap();
        assert!((abscissa(&eigs) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_spectrum_is_zero() {
        let m = DMatrix::zeros(4, 4);
        let eigs = spectrum(&m).unwrap();
        assert!(eigs.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn eigenvalues_come_in_conjugate_pairs() {
        let (_, op) = constant_op(30, 0.02);
        let gen = assemble_generator(&op, &Nonlinearity::zero(), f64::INFINITY, false).unwrap();
        let eigs = spectrum(&gen).unwrap();
        for z in &eigs {
            if z.im.abs() > 1e-9 {
                let mate = eigs
                    .iter()
                    .map(|w| (w - z.conj()).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(mate < 1e-6 * z.norm().max(1.0));
            }
        }
    }

    #[test]
    fn dissipativity_over_presets() {
        for a0 in [0.1, 1.0] {
            let (_, op) = constant_op(60, a0);
            let gen =
                assemble_generator(&op, &Nonlinearity::power(3.0, 5.0), 10.0, false).unwrap();
            let eigs = spectrum(&gen).unwrap();
            assert!(abscissa(&eigs) < 1e-8, "a0 = {a0}");
        }
    }

    #[test]
    fn size_guard_requires_override() {
        let g = build_grid(2, &[1.0, 1.0], &[50, 50]).unwrap();
        let (_, field) = build_damping_preset(
            &g,
            &DampingPreset::Constant,
            &PresetParams {
                a0: 1.0,
                b0: 0.0,
                eps: 0.1,
                ramp: None,
            },
        )
        .unwrap();
        let op = assemble(&g, &field).unwrap();
        assert!(matches!(
            assemble_generator(&op, &Nonlinearity::zero(), f64::INFINITY, false),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn undamped_field_gives_zero_branch_damping() {
        let g = build_grid(1, &[1.0], &[120]).unwrap();
        let field = support_interval_field(&g, 0.3, 0.7, 0.0, 0.0).unwrap();
        // a0 = 0 makes the field vanish; liu_liu should see Re ~ 0
        let branches = liu_liu_diagnostic(&g, &field, 8).unwrap();
        for b in branches {
            assert!(b.re.abs() < 1e-8, "branch {}: {}", b.j, b.re);
        }
    }

    #[test]
    fn indicator_branches_decay_ramped_stay_bounded() {
        // reduced-size version of the non-uniform-decay comparison
        let g = build_grid(1, &[1.0], &[200]).unwrap();
        let p = PresetParams {
            a0: 1.0,
            b0: 1.0,
            eps: 0.05,
            ramp: None,
        };
        let (_, ind) = build_damping_preset(
            &g,
            &DampingPreset::Indicator1d {
                a_start: 0.3,
                a_end: 0.7,
            },
            &p,
        )
        .unwrap();
        let (_, rmp) = build_damping_preset(
            &g,
            &DampingPreset::Interval1d {
                a_start: 0.3,
                a_end: 0.7,
            },
            &PresetParams {
                ramp: Some(0.05),
                ..p
            },
        )
        .unwrap();
        let bi = liu_liu_diagnostic(&g, &ind, 6).unwrap();
        let br = liu_liu_diagnostic(&g, &rmp, 6).unwrap();
        for w in bi.windows(2) {
            assert!(
                w[0].re.abs() > w[1].re.abs(),
                "indicator branches must decrease: {} vs {}",
                w[0].re.abs(),
                w[1].re.abs()
            );
        }
        let rmp_min = br.iter().map(|b| b.re.abs()).fold(f64::INFINITY, f64::min);
        assert!(rmp_min > bi.last().unwrap().re.abs());
    }
}
