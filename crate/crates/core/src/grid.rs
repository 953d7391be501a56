//! Values on a uniform interior grid plus constant exterior extensions.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::interp::Hermite;
use crate::stable::{Exterior, NonlocalFn};

/// `values[i]` sits at x = a + (i+1)h, h = (b − a)/(n + 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    a: f64,
    b: f64,
    values: Vec<f64>,
    left_exterior: f64,
    right_exterior: f64,
}

impl GridFunction {
    pub fn new(a: f64, b: f64, values: Vec<f64>, left_exterior: f64, right_exterior: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::domain(format!("grid interval must satisfy a < b, got ({a}, {b})")));
        }
        if values.len() < 3 {
            return Err(Error::domain(format!("grid needs at least 3 interior nodes, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) || !left_exterior.is_finite() || !right_exterior.is_finite() {
            return Err(Error::domain("grid values must be finite"));
        }
        Ok(GridFunction { a, b, values, left_exterior, right_exterior })
    }

    /// Sample `f` at the interior nodes.
    pub fn from_fn(a: f64, b: f64, n: usize, left: f64, right: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (1..=n).map(|i| f(a + i as f64 * (b - a) / (n + 1) as f64)).collect();
        GridFunction::new(a, b, values, left, right)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn n(&self) -> usize {
        self.values.len()
    }
    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.n() + 1) as f64
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn left_exterior(&self) -> f64 {
        self.left_exterior
    }
    pub fn right_exterior(&self) -> f64 {
        self.right_exterior
    }

    /// Abscissa of interior node `i` (0-based).
    pub fn node(&self, i: usize) -> f64 {
        self.a + (i + 1) as f64 * (self.b - self.a) / (self.n() + 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.node(i)).collect()
    }

    /// Piecewise-linear interpolation through (a, left), the nodes and (b, right);
    /// the exterior constants outside.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.a {
            return self.left_exterior;
        }
        if x >= self.b {
            return self.right_exterior;
        }
        let n = self.n();
        let t = (x - self.a) / self.h();
        let k = (t.floor() as usize).min(n);
        let frac = t - k as f64;
        let at = |j: usize| {
            if j == 0 {
                self.left_exterior
            } else if j > n {
                self.right_exterior
            } else {
                self.values[j - 1]
            }
        };
        at(k) + frac * (at(k + 1) - at(k))
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        if self.n() != other.n() || self.a != other.a || self.b != other.b {
            return Err(Error::domain("grid functions live on different grids"));
        }
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs())))
    }

    /// C¹ cubic Hermite interpolant of the interior data, for use with the generator.
    pub fn smooth(&self) -> SmoothGrid {
        let n = self.n();
        let h = self.h();
        let xs = self.nodes();
        let ds = (0..n)
            .map(|i| match i {
                0 => (self.values[1] - self.values[0]) / h,
                i if i == n - 1 => (self.values[n - 1] - self.values[n - 2]) / h,
                i => (self.values[i + 1] - self.values[i - 1]) / (2.0 * h),
            })
            .collect();
        let inner = Hermite::new(xs, self.values.clone(), ds).expect("grid nodes are increasing and finite");
        SmoothGrid { grid: self.clone(), inner }
    }

    /// CSV with header `x,p`: a sentinel row at `a` carrying the left exterior value,
    /// one row per node, a sentinel row at `b` carrying the right exterior value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,p")?;
        writeln!(w, "{},{}", self.a, self.left_exterior)?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.node(i), v)?;
        }
        writeln!(w, "{},{}", self.b, self.right_exterior)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if i == 0 {
                if line != "x,p" {
                    return Err(Error::config(Some(1), format!("expected header `x,p`, got `{line}`")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| Error::config(Some(i + 1), format!("not a number: `{s}`")))
            };
            let (x, p) = line
                .split_once(',')
                .ok_or_else(|| Error::config(Some(i + 1), format!("expected `x,p`, got `{line}`")))?;
            rows.push((parse(x)?, parse(p)?));
        }
        if rows.len() < 5 {
            return Err(Error::config(None, "grid CSV needs two sentinel rows and at least 3 nodes"));
        }
        let (a, left) = rows[0];
        let (b, right) = rows[rows.len() - 1];
        let values: Vec<f64> = rows[1..rows.len() - 1].iter().map(|r| r.1).collect();
        let g = GridFunction::new(a, b, values, left, right)?;
        let h = g.h();
        for (i, (x, _)) in rows[1..rows.len() - 1].iter().enumerate() {
            if (x - g.node(i)).abs() > 1e-9 * h.max(1.0) {
                return Err(Error::config(Some(i + 3), format!("node {x} is not on the uniform grid")));
            }
        }
        Ok(g)
    }
}

impl NonlocalFn for GridFunction {
    fn eval(&self, y: f64) -> f64 {
        GridFunction::eval(self, y)
    }

    fn kinks(&self) -> Vec<f64> {
        let mut k = vec![self.a];
        k.extend(self.nodes());
        k.push(self.b);
        k
    }

    fn exterior(&self) -> Option<Exterior> {
        Some(Exterior { a: self.a, b: self.b, left: self.left_exterior, right: self.right_exterior })
    }
}

/// [`GridFunction`] with a C¹ interior interpolant.
#[derive(Debug, Clone)]
pub struct SmoothGrid {
    grid: GridFunction,
    inner: Hermite,
}

impl NonlocalFn for SmoothGrid {
    fn eval(&self, y: f64) -> f64 {
        let (lo, hi) = self.inner.domain();
        if y >= lo && y <= hi {
            self.inner.eval(y).unwrap_or(f64::NAN)
        } else {
            self.grid.eval(y)
        }
    }

    fn kinks(&self) -> Vec<f64> {
        let (lo, hi) = self.inner.domain();
        vec![self.grid.a, lo, hi, self.grid.b]
    }

    fn exterior(&self) -> Option<Exterior> {
        NonlocalFn::exterior(&self.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_placement() {
        let g = GridFunction::from_fn(-1.0, 1.0, 401, 0.0, 1.0, |x| 0.5 * (x + 1.0)).unwrap();
        assert_eq!(g.node(200), 0.0);
        assert!((g.h() - 2.0 / 402.0).abs() < 1e-16);
        assert_eq!(g.eval(-3.0), 0.0);
        assert_eq!(g.eval(1.0), 1.0);
        assert!((g.eval(0.123) - 0.5615).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = GridFunction::from_fn(-1.0, 1.0, 17, 0.0, 1.0, |x| (x * 3.1).sin() / 7.0 + 0.4).unwrap();
        let text = g.to_csv_string();
        assert!(text.starts_with("x,p\n-1,0\n"));
        let back = GridFunction::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(GridFunction::read_csv("x,q\n".as_bytes()).is_err());
        assert!(GridFunction::read_csv("x,p\n0,0\n0.5,oops\n1,1\n".as_bytes()).is_err());
        assert!(GridFunction::read_csv("x,p\n0,0\n0.2,1\n0.3,1\n0.75,1\n1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(GridFunction::new(0.0, 1.0, vec![0.5, 0.5], 0.0, 1.0).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![0.5, f64::NAN, 0.1], 0.0, 1.0).is_err());
    }
}
