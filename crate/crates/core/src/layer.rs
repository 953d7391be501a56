//! Boundary and internal layer profiles in stretched coordinates.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::solver::{assemble_operator, DriftScheme, ExteriorOperator};
use crate::stable::LevyMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSide {
    /// F(ξ): 0 for ξ ≤ 0, → 1 as ξ → ∞.
    Left,
    /// G(ς): 1 for ς ≤ 0, → 0 as ς → ∞.
    Right,
    /// H(η): → 0 as η → −∞, → 1 as η → ∞.
    Internal,
}

impl LayerSide {
    /// Constants at the two ends of the stretched axis.
    pub fn far_field(self) -> (f64, f64) {
        match self {
            LayerSide::Left | LayerSide::Internal => (0.0, 1.0),
            LayerSide::Right => (1.0, 0.0),
        }
    }
}

/// Drift coefficient of a layer equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerDrift {
    /// b(A) for the left layer, b(B) for the right one.
    Constant(f64),
    /// b'(x̄) for the internal layer.
    Linear(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerOptions {
    pub span: f64,
    pub n: usize,
    /// Largest allowed gap between the solution at 90% of the span and its far-field value.
    pub far_field_tolerance: f64,
}

impl Default for LayerOptions {
    fn default() -> Self {
        LayerOptions { span: 50.0, n: 2000, far_field_tolerance: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerProfile {
    /// 1 − e^{−γξ} (left) or e^{−γς} (right).
    Exponential { gamma: f64 },
    Numeric(GridFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerFunction {
    pub side: LayerSide,
    /// Stretching exponent: the stretched coordinate is (x − anchor)/ε^β up to orientation.
    pub beta: f64,
    pub anchor: f64,
    pub profile: LayerProfile,
}

/// F(x) = 1 − e^{−γx} for x > 0, 0 otherwise.
pub fn explicit_f(x: f64, gamma: f64) -> f64 {
    if x > 0.0 {
        -(-gamma * x).exp_m1()
    } else {
        0.0
    }
}

/// G(x) = e^{−γx} for x > 0, 1 otherwise.
pub fn explicit_g(x: f64, gamma: f64) -> f64 {
    if x > 0.0 {
        (-gamma * x).exp()
    } else {
        1.0
    }
}

impl LayerFunction {
    pub fn explicit(side: LayerSide, gamma: f64, beta: f64, anchor: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::domain(format!("layer rate must be positive, got {gamma}")));
        }
        if side == LayerSide::Internal {
            return Err(Error::Unsupported("no explicit internal layer".into()));
        }
        Ok(LayerFunction { side, beta, anchor, profile: LayerProfile::Exponential { gamma } })
    }

    /// Value at stretched coordinate `s`.
    pub fn eval(&self, s: f64) -> f64 {
        match &self.profile {
            LayerProfile::Exponential { gamma } => match self.side {
                LayerSide::Right => explicit_g(s, *gamma),
                _ => explicit_f(s, *gamma),
            },
            LayerProfile::Numeric(g) => g.eval(s),
        }
    }

    /// Value at physical point `x` for noise level `eps`.
    pub fn eval_physical(&self, x: f64, eps: f64) -> f64 {
        let scale = eps.powf(self.beta);
        let s = match self.side {
            LayerSide::Left | LayerSide::Internal => (x - self.anchor) / scale,
            LayerSide::Right => (self.anchor - x) / scale,
        };
        self.eval(s)
    }

    pub fn gamma(&self) -> Option<f64> {
        match self.profile {
            LayerProfile::Exponential { gamma } => Some(gamma),
            LayerProfile::Numeric(_) => None,
        }
    }
}

/// Solve a layer equation with all-jump compensation on a finite span:
///
/// * left:     b(A) F' + L F = 0 on (0, span), F = 0 on ξ ≤ 0, F = 1 on ξ ≥ span
/// * right:   −b(B) G' + L G = 0 on (0, span), G = 1 on ς ≤ 0, G = 0 on ς ≥ span
/// * internal: b'(x̄) η H' + L H = 0 on (−span, span), H = 0 / 1 beyond ∓span
///
/// The solution at 90% of the span must be within `far_field_tolerance` of the
/// far-field value, otherwise the span is reported as too small.
pub fn solve_layer_problem(
    drift: LayerDrift,
    measure: &LevyMeasure,
    side: LayerSide,
    opts: &LayerOptions,
) -> Result<LayerFunction> {
    let alpha = measure.alpha();
    alpha.require_superlinear()?;
    if !(opts.span > 0.0 && opts.span.is_finite()) {
        return Err(Error::domain("layer span must be positive"));
    }
    let coefficient = match (side, drift) {
        (LayerSide::Left, LayerDrift::Constant(b)) => b,
        (LayerSide::Right, LayerDrift::Constant(b)) => -b,
        (LayerSide::Internal, LayerDrift::Linear(s)) => s,
        _ => return Err(Error::domain("constant drift for boundary layers, linear drift for the internal layer")),
    };
    if !(coefficient > 0.0) {
        return Err(Error::domain(format!("layer drift has the wrong sign for a {side:?} layer ({coefficient})")));
    }
    let (lo, hi) = match side {
        LayerSide::Internal => (-opts.span, opts.span),
        _ => (0.0, opts.span),
    };
    let (left, right) = side.far_field();
    let drift_fn = move |x: f64| if side == LayerSide::Internal { coefficient * x } else { coefficient };
    let zero = |_: f64| 0.0;
    let op = ExteriorOperator {
        a: lo,
        b: hi,
        drift: &drift_fn,
        diffusion: &zero,
        jump_intensity: 1.0,
        kernel: measure.kernel(),
        left,
        right,
    };
    let sys = assemble_operator(&op, opts.n, DriftScheme::Central)?;
    let sol = sys.solve()?;
    let grid = GridFunction::new(lo, hi, sol.x, left, right)?;

    let probe = 0.9 * opts.span;
    let mismatch = match side {
        LayerSide::Left => (grid.eval(probe) - 1.0).abs(),
        LayerSide::Right => grid.eval(probe).abs(),
        LayerSide::Internal => grid.eval(-probe).abs().max((grid.eval(probe) - 1.0).abs()),
    };
    if mismatch > opts.far_field_tolerance {
        return Err(Error::Accuracy(format!(
            "layer profile is {mismatch:.3e} away from its far-field value at 90% of span {}; increase the span",
            opts.span
        )));
    }
    let beta = match side {
        LayerSide::Internal => 1.0,
        _ => alpha.layer_exponent()?,
    };
    Ok(LayerFunction { side, beta, anchor: 0.0, profile: LayerProfile::Numeric(grid) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::StabilityIndex;

    fn truncated() -> LevyMeasure {
        LevyMeasure::truncated(StabilityIndex::new(1.5).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn explicit_profiles() {
        assert_eq!(explicit_f(0.0, 0.7), 0.0);
        assert_eq!(explicit_g(-1e-12, 0.7), 1.0);
        for x in [0.1, 1.0, 7.5] {
            assert!((explicit_f(x, 0.7) + explicit_g(x, 0.7) - 1.0).abs() < 1e-15);
        }
        let g = 0.4;
        assert!((explicit_f(10.0 / g, g) - (1.0 - (-10.0f64).exp())).abs() < 1e-15);
        assert!((explicit_f(10.0 / g, g) - 0.9999546).abs() < 1e-7);
    }

    #[test]
    fn internal_layer_is_antisymmetric() {
        let opts = LayerOptions { span: 20.0, n: 401, far_field_tolerance: 1e-2 };
        let h = solve_layer_problem(LayerDrift::Linear(1.0), &truncated(), LayerSide::Internal, &opts).unwrap();
        assert!((h.eval(0.0) - 0.5).abs() < 1e-10);
        assert!((h.eval(2.0) + h.eval(-2.0) - 1.0).abs() < 1e-10);
        assert_eq!(h.beta, 1.0);
    }

    #[test]
    fn right_layer_complements_left_layer() {
        let opts = LayerOptions { span: 30.0, n: 600, far_field_tolerance: 1e-2 };
        let f = solve_layer_problem(LayerDrift::Constant(1.0), &truncated(), LayerSide::Left, &opts).unwrap();
        let g = solve_layer_problem(LayerDrift::Constant(-1.0), &truncated(), LayerSide::Right, &opts).unwrap();
        for s in [0.05, 0.5, 2.0, 11.0] {
            assert!((f.eval(s) + g.eval(s) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn short_span_is_reported() {
        let opts = LayerOptions { span: 2.0, n: 200, far_field_tolerance: 1e-3 };
        let r = solve_layer_problem(LayerDrift::Constant(1.0), &truncated(), LayerSide::Left, &opts);
        assert!(matches!(r, Err(Error::Accuracy(_))));
    }

    #[test]
    fn wrong_drift_sign_rejected() {
        let opts = LayerOptions::default();
        let r = solve_layer_problem(LayerDrift::Constant(-1.0), &truncated(), LayerSide::Left, &opts);
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
