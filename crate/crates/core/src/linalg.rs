//! Symmetric banded positive-definite systems (the midpoint Jacobian is
//! tridiagonal in 1D and has bandwidth `nx` in 2D under lexicographic
//! ordering). Direct Cholesky keeps the solver deterministic.

/// Lower-band storage: `data[d * n + i] = A[i + d, i]` for `d = 0..=bw`.
#[derive(Clone, Debug)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBanded {
            n,
            bw,
            data: vec![0.0; (bw + 1) * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Add `v` to `A[i + d, i]` (and by symmetry `A[i, i + d]`).
    #[inline]
    pub fn add(&mut self, d: usize, i: usize, v: f64) {
        debug_assert!(d <= self.bw && i + d < self.n);
        self.data[d * self.n + i] += v;
    }

    #[inline]
    pub fn add_diag(&mut self, i: usize, v: f64) {
        self.data[i] += v;
    }

    /// Overwrite this matrix with a copy of `other` (same shape); avoids
    /// reallocating inside the Newton loop.
    pub fn copy_from(&mut self, other: &SymBanded) {
        debug_assert!(self.n == other.n && self.bw == other.bw);
        self.data.copy_from_slice(&other.data);
    }

    /// In-place Cholesky `A = L L^T`. Fails with the pivot row when the
    /// matrix is not positive definite.
    pub fn cholesky_in_place(&mut self) -> Result<(), usize> {
        let (n, bw) = (self.n, self.bw);
        for j in 0..n {
            let start = j.saturating_sub(bw);
            let mut s = self.data[j];
            for k in start..j {
                let ljk = self.data[(j - k) * n + k];
                s -= ljk * ljk;
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(j);
            }
            let ljj = s.sqrt();
            self.data[j] = ljj;
            let dmax = bw.min(n - 1 - j);
            for d in 1..=dmax {
                let i = j + d;
                let mut s = self.data[d * n + j];
                for k in i.saturating_sub(bw)..j {
                    s -= self.data[(i - k) * n + k] * self.data[(j - k) * n + k];
                }
                self.data[d * n + j] = s / ljj;
            }
        }
        Ok(())
    }

    /// Solve `A x = b` in place after `cholesky_in_place`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        debug_assert_eq!(x.len(), n);
        // forward: L y = b
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[(i - k) * n + k] * x[k];
            }
            x[i] = s / self.data[i];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.data[(k - i) * n + i] * x[k];
            }
            x[i] = s / self.data[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mv(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
            .collect()
    }

    #[test]
    fn solves_tridiagonal_system() {
        // A = tridiag(-1, 3, -1), n = 6
        let n = 6;
        let mut m = SymBanded::zeros(n, 1);
        for i in 0..n {
            m.add_diag(i, 3.0);
            if i + 1 < n {
                m.add(1, i, -1.0);
            }
        }
        let dense: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            3.0
                        } else if i.abs_diff(j) == 1 {
                            -1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut b = dense_mv(&dense, &x_true);
        m.cholesky_in_place().unwrap();
        m.solve_in_place(&mut b);
        for (xi, ti) in b.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn solves_wider_band() {
        // SPD matrix with bandwidth 3 via A = I + B B^T pattern sampled by hand
        let n = 9;
        let bw = 3;
        let mut m = SymBanded::zeros(n, bw);
        for i in 0..n {
            m.add_diag(i, 10.0 + i as f64);
            for d in 1..=bw.min(n - 1 - i) {
                m.add(d, i, -1.0 / (d as f64 + 1.0));
            }
        }
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = 10.0 + i as f64;
            for d in 1..=bw.min(n - 1 - i) {
                dense[i + d][i] = -1.0 / (d as f64 + 1.0);
                dense[i][i + d] = -1.0 / (d as f64 + 1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| 1.0 - 0.3 * i as f64).collect();
        let mut b = dense_mv(&dense, &x_true);
        m.cholesky_in_place().unwrap();
        m.solve_in_place(&mut b);
        for (xi, ti) in b.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let mut m = SymBanded::zeros(3, 1);
        m.add_diag(0, 1.0);
        m.add_diag(1, -5.0);
        m.add_diag(2, 1.0);
        assert_eq!(m.cholesky_in_place(), Err(1));
    }
}
