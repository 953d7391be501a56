//! Dense systems: LU solve, residual verification and a 1-norm condition estimate.

use faer::prelude::*;
use faer::Mat;

use crate::error::{Error, Result};

/// Systems whose estimated condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone)]
pub struct DenseSystem {
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    /// ‖M x − r‖_∞, recomputed after the solve.
    pub residual: f64,
    /// Estimate of ‖M‖₁‖M⁻¹‖₁.
    pub condition: f64,
}

impl DenseSystem {
    pub fn zeros(n: usize) -> Self {
        DenseSystem { matrix: Mat::zeros(n, n), rhs: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for j in 0..n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let col = self.matrix.col(j);
            for (i, o) in out.iter_mut().enumerate() {
                *o += col.read(i) * xj;
            }
        }
        out
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(&self.rhs).fold(0.0, |m, (ax, r)| f64::max(m, (ax - r).abs()))
    }

    pub fn solve(&self) -> Result<Solution> {
        let n = self.n();
        if self.matrix.nrows() != n || self.matrix.ncols() != n {
            return Err(Error::domain("matrix and right-hand side sizes differ"));
        }
        let mut finite = true;
        for j in 0..n {
            for i in 0..n {
                finite &= self.matrix.read(i, j).is_finite();
            }
        }
        if !finite || self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("assembled system has non-finite entries"));
        }
        let lu = self.matrix.partial_piv_lu();
        let b = Mat::from_fn(n, 1, |i, _| self.rhs[i]);
        let sol = lu.solve(&b);
        let x: Vec<f64> = (0..n).map(|i| sol.read(i, 0)).collect();

        let solve = |v: &[f64], transpose: bool| -> Vec<f64> {
            let m = Mat::from_fn(n, 1, |i, _| v[i]);
            let s = if transpose { lu.solve_transpose(&m) } else { lu.solve(&m) };
            (0..n).map(|i| s.read(i, 0)).collect()
        };
        let inv_norm = hager_inverse_norm(n, solve);
        let condition = one_norm(&self.matrix) * inv_norm;
        if !condition.is_finite() || condition > MAX_CONDITION || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular { condition: if condition.is_finite() { condition } else { f64::INFINITY } });
        }
        let residual = self.residual(&x);
        Ok(Solution { x, residual, condition })
    }
}

fn one_norm(m: &Mat<f64>) -> f64 {
    (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m.read(i, j).abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Hager's estimate of ‖M⁻¹‖₁ with Higham's alternating-sign safeguard.
fn hager_inverse_norm(n: usize, solve: impl Fn(&[f64], bool) -> Vec<f64>) -> f64 {
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    for iter in 0..5 {
        let y = solve(&x, false);
        est = y.iter().map(|v| v.abs()).sum::<f64>();
        if !est.is_finite() {
            return f64::INFINITY;
        }
        let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = solve(&xi, true);
        let (j, zmax) = z.iter().enumerate().fold((0, 0.0f64), |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if iter > 0 && zmax <= ztx {
            break;
        }
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    let alt: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        })
        .collect();
    let y = solve(&alt, false);
    let est2 = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
    est.max(est2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_reports_condition() {
        let n = 30;
        let mut s = DenseSystem::zeros(n);
        for i in 0..n {
            s.matrix.write(i, i, -2.0);
            if i > 0 {
                s.matrix.write(i, i - 1, 1.0);
            }
            if i + 1 < n {
                s.matrix.write(i, i + 1, 1.0);
            }
        }
        s.rhs[n - 1] = -1.0;
        let sol = s.solve().unwrap();
        for (i, v) in sol.x.iter().enumerate() {
            assert!((v - (i + 1) as f64 / (n + 1) as f64).abs() < 1e-13);
        }
        assert!(sol.residual < 1e-13);
        // exact κ₁ of the second-difference matrix grows like n²/2; the estimate is a lower bound of that order
        assert!(sol.condition > 100.0 && sol.condition < 1e4, "{}", sol.condition);
    }

    #[test]
    fn condition_estimate_is_sharp_lower_bound() {
        let mut s = DenseSystem::zeros(3);
        let m = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                s.matrix.write(i, j, m[i][j]);
            }
        }
        s.rhs = vec![1.0, 2.0, 3.0];
        let sol = s.solve().unwrap();
        // inverse computed by hand: det = 18
        let inv = [[5.0, -2.0, 1.0], [-2.0, 8.0, -4.0], [1.0, -4.0, 11.0]];
        let inv_norm = (0..3).map(|j| (0..3).map(|i| f64::abs(inv[i][j]) / 18.0).sum::<f64>()).fold(0.0, f64::max);
        let exact = 6.0 * inv_norm;
        // the estimate is a lower bound and, on small matrices, usually sharp
        assert!(sol.condition <= exact * (1.0 + 1e-12), "{} vs {exact}", sol.condition);
        assert!(sol.condition >= 0.5 * exact, "{} vs {exact}", sol.condition);
    }

    #[test]
    fn singular_rejected() {
        let mut s = DenseSystem::zeros(3);
        for i in 0..3 {
            s.matrix.write(i, 0, 1.0);
            s.matrix.write(i, 1, 2.0);
            s.matrix.write(i, 2, 3.0);
        }
        s.rhs = vec![1.0, 1.0, 1.0];
        assert!(matches!(s.solve(), Err(Error::Singular { .. })));
    }
}
