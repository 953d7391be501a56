//! Piecewise cubic Hermite interpolation.

use crate::error::{Error, Result};

/// Cubic Hermite interpolant through (x_i, y_i) with slopes d_i.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Hermite {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.len() != ds.len() {
            return Err(Error::domain("interpolation table needs matching lengths of at least 2"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("interpolation abscissae must be strictly increasing"));
        }
        if ys.iter().chain(&ds).any(|v| !v.is_finite()) {
            return Err(Error::domain("interpolation table contains non-finite values"));
        }
        Ok(Hermite { xs, ys, ds })
    }

    /// Monotone (Fritsch–Carlson) slopes.
    pub fn monotone(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::domain("monotone interpolation needs matching tables of at least 2 points"));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds[0] = delta[0];
            ds[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            ds[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Hermite::new(xs, ys, ds)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    fn cell(&self, x: f64) -> Option<(usize, f64, f64)> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k => (k - 1).min(self.xs.len() - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        Some((i, h, (x - self.xs[i]) / h))
    }

    /// Value at `x`, or `None` outside the tabulated range.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (i, h, t) = self.cell(x)?;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Some(h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1])
    }

    /// Derivative of the interpolant at `x`.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        let (i, h, t) = self.cell(x)?;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        Some(d00 * self.ys[i] + d10 * self.ds[i] + d01 * self.ys[i + 1] + d11 * self.ds[i + 1])
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_with_exact_slopes() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.4).collect();
        let f = |x: f64| x * x * x - x;
        let d = |x: f64| 3.0 * x * x - 1.0;
        let h = Hermite::new(xs.clone(), xs.iter().map(|&x| f(x)).collect(), xs.iter().map(|&x| d(x)).collect()).unwrap();
        for k in 0..50 {
            let x = k as f64 * 2.0 / 49.0;
            assert!((h.eval(x).unwrap() - f(x)).abs() < 1e-13);
            assert!((h.derivative(x).unwrap() - d(x)).abs() < 1e-12);
        }
        assert!(h.eval(-0.1).is_none());
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.0, 0.1, 5.0, 5.0];
        let h = Hermite::monotone(xs, ys).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let v = h.eval(k as f64 / 100.0).unwrap();
            assert!(v >= prev - 1e-14);
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Hermite::monotone(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Hermite::monotone(vec![0.0], vec![1.0]).is_err());
    }
}
