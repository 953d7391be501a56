//! Stationary density of dX = −X dt + ε dL^α, with Fourier transform exp(−ε^α|k|^α/α).

use libm::tgamma;

use crate::error::{Error, Result};
use crate::interp::Hermite;
use crate::quad::{self, Tolerance};
use crate::stable::StabilityIndex;

fn scale(alpha: StabilityIndex, epsilon: f64) -> Result<f64> {
    alpha.require_superlinear()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(epsilon.powf(alpha.value()) / alpha.value())
}

/// Frequency cutoff with e^{−s K^α} = e^{−40}.
pub fn default_cutoff(alpha: StabilityIndex, epsilon: f64) -> Result<f64> {
    Ok((40.0 / scale(alpha, epsilon)?).powf(1.0 / alpha.value()))
}

/// Bound on (1/π)∫_K^∞ e^{−s k^α} dk.
fn discarded_tail(s: f64, alpha: f64, k: f64) -> f64 {
    (-s * k.powf(alpha)).exp() / (std::f64::consts::PI * s * alpha * k.powf(alpha - 1.0))
}

/// (1/π)∫_0^K w(k) e^{−s k^α} dk over half-period panels of the oscillating factor.
fn cosine_transform(s: f64, alpha: f64, x: f64, cutoff: f64, weight: impl Fn(f64) -> f64) -> Result<f64> {
    let panels = ((cutoff * x.abs() / std::f64::consts::PI).ceil() as usize).clamp(8, 200_000);
    let mut breaks: Vec<f64> = (0..=panels).map(|i| cutoff * i as f64 / panels as f64).collect();
    // resolve the k^α cusp at the origin
    let first = breaks[1];
    for d in [1e-6, 1e-4, 1e-2] {
        breaks.push(first * d);
    }
    breaks.sort_by(f64::total_cmp);
    let f = |k: f64| weight(k) * (-s * k.powf(alpha)).exp();
    let tol = Tolerance::absolute(1e-11).with_rel(1e-10).with_max_segments(4 * panels + 4000);
    Ok(quad::integrate_breaks(f, &breaks, tol)?.value / std::f64::consts::PI)
}

/// ρ(x) by cosine-transform quadrature on [0, K]; `truncation` defaults to [`default_cutoff`].
pub fn stationary_density(alpha: StabilityIndex, epsilon: f64, x: f64, truncation: Option<f64>) -> Result<f64> {
    let s = scale(alpha, epsilon)?;
    let a = alpha.value();
    let k = match truncation {
        Some(k) if k > 0.0 => k,
        Some(k) => return Err(Error::domain(format!("truncation must be positive, got {k}"))),
        None => default_cutoff(alpha, epsilon)?,
    };
    let tail = discarded_tail(s, a, k);
    let peak = tgamma(1.0 + 1.0 / a) / (std::f64::consts::PI * s.powf(1.0 / a));
    if tail > 1e-10 * peak {
        return Err(Error::Accuracy(format!("frequency cutoff {k} leaves a tail of {tail:.3e}; increase it")));
    }
    cosine_transform(s, a, x, k, |f| (f * x).cos())
}

fn series_coefficient(s: f64, alpha: f64, n: usize, factorial: f64) -> f64 {
    let na = n as f64 * alpha;
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    sign * tgamma(na + 1.0) / factorial * (0.5 * na * std::f64::consts::PI).sin() * s.powi(n as i32) / std::f64::consts::PI
}

/// Leading terms of the large-|x| expansion
/// (1/π) Σ (−1)^{n+1} Γ(nα+1)/n! sin(nπα/2) s^n |x|^{−nα−1}, with its derivative in |x|.
fn tail_series(s: f64, alpha: f64, x: f64) -> (f64, f64) {
    let ax = x.abs();
    let (mut value, mut slope) = (0.0, 0.0);
    let mut fact = 1.0;
    for n in 1..=6 {
        fact *= n as f64;
        let na = n as f64 * alpha;
        let c = series_coefficient(s, alpha, n, fact);
        value += c * ax.powf(-na - 1.0);
        slope += -(na + 1.0) * c * ax.powf(-na - 2.0);
    }
    (value, slope)
}

/// ρ tabulated on [0, Y] with exact slopes, continued by the tail expansion beyond Y,
/// where Y is the point at which s/Y^α = 10⁻³.
#[derive(Debug, Clone)]
pub struct StationaryDensity {
    alpha: f64,
    epsilon: f64,
    s: f64,
    y_max: f64,
    table: Hermite,
}

impl StationaryDensity {
    pub fn new(alpha: StabilityIndex, epsilon: f64) -> Result<Self> {
        let s = scale(alpha, epsilon)?;
        let a = alpha.value();
        let y_max = (1e3 * s).powf(1.0 / a);
        let k = default_cutoff(alpha, epsilon)?;
        let n = 600;
        let xs: Vec<f64> = (0..=n).map(|j| y_max * (j as f64 / n as f64).powi(2)).collect();
        let ys = xs.iter().map(|&x| cosine_transform(s, a, x, k, |f| (f * x).cos())).collect::<Result<Vec<_>>>()?;
        let ds = xs.iter().map(|&x| cosine_transform(s, a, x, k, |f| -f * (f * x).sin())).collect::<Result<Vec<_>>>()?;
        Ok(StationaryDensity { alpha: a, epsilon, s, y_max, table: Hermite::new(xs, ys, ds)? })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// End of the tabulated range.
    pub fn table_range(&self) -> f64 {
        self.y_max
    }

    pub fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.y_max {
            self.table.eval(ax).unwrap_or(0.0)
        } else {
            tail_series(self.s, self.alpha, ax).0
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let ax = x.abs();
        let d = if ax <= self.y_max { self.table.derivative(ax).unwrap_or(0.0) } else { tail_series(self.s, self.alpha, ax).1 };
        d * x.signum()
    }

    /// ∫_y^∞ ρ for y at or beyond the table.
    fn tail_mass(&self, y: f64) -> f64 {
        let mut fact = 1.0;
        let mut m = 0.0;
        for n in 1..=6 {
            fact *= n as f64;
            let na = n as f64 * self.alpha;
            m += series_coefficient(self.s, self.alpha, n, fact) * y.powf(-na) / na;
        }
        m
    }

    /// ∫ρ over the real line from the table and the tail expansion.
    pub fn total_mass(&self) -> Result<f64> {
        let nodes = self.table.nodes().to_vec();
        let inner = quad::integrate_breaks(|x| self.eval(x), &nodes, Tolerance::absolute(1e-13).with_rel(1e-12))?.value;
        Ok(2.0 * (inner + self.tail_mass(self.y_max)))
    }
}
