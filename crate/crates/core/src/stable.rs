//! Symmetric α-stable ingredients: Lévy measures, the normalizing constant,
//! the nonlocal generator and increment sampling.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Uniform};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

/// Stability index α, always in (0, 2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct StabilityIndex(f64);

impl StabilityIndex {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 2.0 {
            Ok(StabilityIndex(alpha))
        } else {
            Err(Error::domain(format!("stability index must lie in (0, 2), got {alpha}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Guard for the pure-jump machinery, which needs 1 < α < 2.
    pub fn require_superlinear(self) -> Result<()> {
        if self.0 > 1.0 {
            Ok(())
        } else {
            Err(Error::domain(format!("operation requires 1 < alpha < 2, got {}", self.0)))
        }
    }

    /// Boundary-layer stretching exponent α/(α−1).
    pub fn layer_exponent(self) -> Result<f64> {
        self.require_superlinear()?;
        Ok(self.0 / (self.0 - 1.0))
    }
}

/// C_{1,α} = αΓ((1+α)/2) / (2^{1−α} √π Γ(1−α/2)).
pub fn stable_constant(alpha: StabilityIndex) -> f64 {
    let a = alpha.value();
    a * libm::tgamma(0.5 * (1.0 + a)) / (2f64.powf(1.0 - a) * PI.sqrt() * libm::tgamma(1.0 - 0.5 * a))
}

/// Ψ(z) = −|z|^α.
pub fn characteristic_exponent(alpha: StabilityIndex, z: f64) -> f64 {
    -z.abs().powf(alpha.value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyMeasure {
    /// C_{1,α} |u|^{−1−α}
    FullPowerLaw { alpha: StabilityIndex },
    /// κ |u|^{−1−α} on |u| ≤ 1, zero outside.
    TruncatedPowerLaw { alpha: StabilityIndex, kappa: f64 },
}

impl LevyMeasure {
    pub fn full(alpha: StabilityIndex) -> Self {
        LevyMeasure::FullPowerLaw { alpha }
    }

    pub fn truncated(alpha: StabilityIndex, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be positive, got {kappa}")));
        }
        Ok(LevyMeasure::TruncatedPowerLaw { alpha, kappa })
    }

    pub fn alpha(&self) -> StabilityIndex {
        match *self {
            LevyMeasure::FullPowerLaw { alpha } | LevyMeasure::TruncatedPowerLaw { alpha, .. } => alpha,
        }
    }

    pub fn with_alpha(&self, alpha: StabilityIndex) -> Self {
        match *self {
            LevyMeasure::FullPowerLaw { .. } => LevyMeasure::FullPowerLaw { alpha },
            LevyMeasure::TruncatedPowerLaw { kappa, .. } => LevyMeasure::TruncatedPowerLaw { alpha, kappa },
        }
    }

    pub fn kernel(&self) -> Kernel {
        match *self {
            LevyMeasure::FullPowerLaw { alpha } => Kernel {
                alpha: alpha.value(),
                coefficient: stable_constant(alpha),
                cutoff: None,
            },
            LevyMeasure::TruncatedPowerLaw { alpha, kappa } => Kernel {
                alpha: alpha.value(),
                coefficient: kappa,
                cutoff: Some(1.0),
            },
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, LevyMeasure::TruncatedPowerLaw { .. })
    }
}

/// Power-law jump kernel c|u|^{−1−α}, optionally supported on |u| ≤ cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub alpha: f64,
    pub coefficient: f64,
    pub cutoff: Option<f64>,
}

impl Kernel {
    /// Jump kernel of ε·L when `self` is the kernel of L.
    pub fn scaled(&self, eps: f64) -> Kernel {
        Kernel {
            alpha: self.alpha,
            coefficient: self.coefficient * eps.powf(self.alpha),
            cutoff: self.cutoff.map(|r| r * eps),
        }
    }

    pub fn density(&self, u: f64) -> f64 {
        let a = u.abs();
        match self.cutoff {
            Some(r) if a > r => 0.0,
            _ => self.coefficient * a.powf(-1.0 - self.alpha),
        }
    }

    /// ∫_u^∞ density, one side.
    pub fn tail(&self, u: f64) -> f64 {
        let a = self.alpha;
        match self.cutoff {
            None => self.coefficient * u.powf(-a) / a,
            Some(r) if u < r => self.coefficient * (u.powf(-a) - r.powf(-a)) / a,
            Some(_) => 0.0,
        }
    }

    /// ∫_0^δ u² density, one side.
    pub fn second_moment(&self, delta: f64) -> f64 {
        let d = match self.cutoff {
            Some(r) => delta.min(r),
            None => delta,
        };
        self.coefficient * d.powf(2.0 - self.alpha) / (2.0 - self.alpha)
    }
}

pub fn levy_density(measure: &LevyMeasure, u: f64) -> Result<f64> {
    if u == 0.0 || !u.is_finite() {
        return Err(Error::domain(format!("Levy density undefined at u = {u}")));
    }
    Ok(measure.kernel().density(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compensation {
    SmallJumpsOnly,
    AllJumps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub inner_cutoff: f64,
    pub outer_cutoff: f64,
    pub nodes_per_decade: usize,
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { inner_cutoff: 1e-4, outer_cutoff: 20.0, nodes_per_decade: 32, tolerance: 1e-8 }
    }
}

impl QuadratureConfig {
    /// Defaults tied to a uniform grid with `n` interior nodes on (a, b).
    pub fn for_grid(a: f64, b: f64, n: usize) -> Self {
        let h = (b - a) / (n + 1) as f64;
        QuadratureConfig { inner_cutoff: 1e-4 * h, outer_cutoff: 10.0 * (b - a), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_cutoff > 0.0 && self.inner_cutoff < 1.0) {
            return Err(Error::domain("inner_cutoff must lie in (0, 1)"));
        }
        if !(self.outer_cutoff >= 1.0 && self.outer_cutoff.is_finite()) {
            return Err(Error::domain("outer_cutoff must be finite and at least 1"));
        }
        if self.nodes_per_decade < 8 {
            return Err(Error::domain("nodes_per_decade must be at least 8"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::domain("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Constant values a function takes outside a bounded interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exterior {
    pub a: f64,
    pub b: f64,
    pub left: f64,
    pub right: f64,
}

/// A real function that the generator can be applied to.
pub trait NonlocalFn {
    fn eval(&self, y: f64) -> f64;

    /// Abscissae where the function may fail to be smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    fn exterior(&self) -> Option<Exterior> {
        None
    }
}

impl<F: Fn(f64) -> f64> NonlocalFn for F {
    fn eval(&self, y: f64) -> f64 {
        self(y)
    }
}

/// Closure on (a, b) extended by constants: `left` on (−∞, a], `right` on [b, ∞).
pub struct Extended<F> {
    pub inner: F,
    pub exterior: Exterior,
    pub extra_kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64> Extended<F> {
    pub fn new(inner: F, a: f64, b: f64, left: f64, right: f64) -> Self {
        Extended { inner, exterior: Exterior { a, b, left, right }, extra_kinks: Vec::new() }
    }
}

impl<F: Fn(f64) -> f64> NonlocalFn for Extended<F> {
    fn eval(&self, y: f64) -> f64 {
        let e = &self.exterior;
        if y <= e.a {
            e.left
        } else if y >= e.b {
            e.right
        } else {
            (self.inner)(y)
        }
    }

    fn kinks(&self) -> Vec<f64> {
        let mut k = vec![self.exterior.a, self.exterior.b];
        k.extend_from_slice(&self.extra_kinks);
        k
    }

    fn exterior(&self) -> Option<Exterior> {
        Some(self.exterior)
    }
}

/// (L f)(x) = ∫ (f(x+u) − f(x) − f'(x) u 1_{|u|≤1}) ν(du) for the symmetric measure `measure`.
///
/// For a symmetric kernel both compensation conventions give the same value;
/// `AllJumps` is validated to need α > 1.
pub fn apply_generator<F: NonlocalFn + ?Sized>(
    f: &F,
    x: f64,
    measure: &LevyMeasure,
    compensation: Compensation,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if compensation == Compensation::AllJumps {
        measure.alpha().require_superlinear()?;
    }
    apply_kernel(f, x, &measure.kernel(), quad)
}

/// Generator for an arbitrary power-law [`Kernel`], e.g. the ε-scaled one.
pub fn apply_kernel<F: NonlocalFn + ?Sized>(f: &F, x: f64, kernel: &Kernel, quad: &QuadratureConfig) -> Result<f64> {
    quad.validate()?;
    let fx = f.eval(x);
    let kinks = f.kinks();
    let nearest = kinks
        .iter()
        .map(|k| (k - x).abs())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let delta = quad.inner_cutoff.min(0.5 * nearest);

    // 3-point differences at h and 2h, Richardson-combined: a step near 1e-3 keeps the
    // roundoff 4 eps|f|/h² below 1e-9 without an O(h²) truncation error.
    let step = delta.max(1e-3).min(0.25 * nearest);
    let second = |h: f64| (f.eval(x + h) + f.eval(x - h) - 2.0 * fx) / (h * h);
    let f2 = (4.0 * second(step) - second(2.0 * step)) / 3.0;
    let near = f2 * kernel.second_moment(delta);

    let exterior = f.exterior();
    let mut hi = quad.outer_cutoff;
    if let Some(e) = exterior {
        hi = hi.max(e.b - x).max(x - e.a);
    }
    if let Some(r) = kernel.cutoff {
        hi = hi.min(r);
    }
    if hi <= delta {
        return Ok(near);
    }

    let mut breaks = quad::log_spaced(delta, hi, quad.nodes_per_decade);
    for k in &kinks {
        let d = (k - x).abs();
        if d > delta && d < hi {
            breaks.push(d);
        }
    }
    if let Some(r) = kernel.cutoff {
        if r > delta && r < hi {
            breaks.push(r);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let integrand = |u: f64| (f.eval(x + u) + f.eval(x - u) - 2.0 * fx) * kernel.density(u);
    let tol = Tolerance::absolute(quad.tolerance).with_rel(quad.tolerance);
    let middle = match quad::integrate_breaks(integrand, &breaks, tol) {
        Ok(e) => e.value,
        Err(Error::Quadrature { estimate, tolerance }) => {
            // D carries absolute roundoff ~ eps |f|, amplified by the kernel mass beyond delta.
            let mut magnitude = fx.abs();
            if let Some(e) = exterior {
                magnitude = magnitude.max(e.left.abs()).max(e.right.abs());
            }
            let floor = 16.0 * f64::EPSILON * magnitude * kernel.tail(delta);
            if estimate > floor {
                return Err(Error::Quadrature { estimate, tolerance });
            }
            quad::integrate_breaks(integrand, &breaks, Tolerance::absolute(floor))?.value
        }
        Err(e) => return Err(e),
    };

    let tail = if kernel.cutoff.is_some_and(|r| hi >= r) {
        0.0
    } else {
        let far = match exterior {
            Some(e) => e.left + e.right - 2.0 * fx,
            None => f.eval(x + hi) + f.eval(x - hi) - 2.0 * fx,
        };
        far * kernel.tail(hi)
    };
    Ok(near + middle + tail)
}

/// One draw of L^α_{dt}: dt^{1/α} times a standard symmetric α-stable variate
/// (characteristic function e^{−|z|^α}), by the Chambers–Mallows–Stuck transform.
pub fn sample_stable_increment<R: Rng + ?Sized>(alpha: StabilityIndex, dt: f64, rng: &mut R) -> f64 {
    let a = alpha.value();
    let v: f64 = Uniform::new(-FRAC_PI_2, FRAC_PI_2).sample(rng);
    let w: f64 = Exp1.sample(rng);
    let s = if a == 1.0 {
        v.tan()
    } else {
        (a * v).sin() / v.cos().powf(1.0 / a) * (((1.0 - a) * v).cos() / w).powf((1.0 - a) / a)
    };
    dt.powf(1.0 / a) * s
}
