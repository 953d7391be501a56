//! Boundary and internal layer expansions for problems without diffusion.
//!
//! * Case1 (b > 0): p ≈ F((x − A)/ε^β)
//! * Case2 (b < 0): p ≈ G((B − x)/ε^β)
//! * Case3 (unstable x̄): p ≈ H((x − x̄)/ε)
//! * Case4 (stable x̄): p ≈ C·F((x − A)/ε^β) + (1 − C)·G((B − x)/ε^β)
//!
//! written for escape to the right; the left target is the mirror L + (R − L)·(…).

use crate::asymptotics::case4::{case4_constant, Case4Constant, Case4Options};
use crate::error::{Error, Result};
use crate::layer::{solve_layer_problem, LayerDrift, LayerFunction, LayerOptions, LayerSide};
use crate::model::{CaseLabel, EscapeProblem};
use crate::quad::{self, Tolerance};
use crate::stable::{apply_generator, Compensation, LevyMeasure, NonlocalFn, QuadratureConfig, StabilityIndex};

/// ∫_0^1 (cosh(γu) − 1 − γ²u²/2) u^{−1−α} du, with a series for small γu.
fn subtracted_integral(gamma: f64, alpha: f64) -> Result<f64> {
    let f = |u: f64| {
        let z = gamma * u;
        let rest = if z.abs() < 0.05 {
            let z2 = z * z;
            z2 * z2 / 24.0 * (1.0 + z2 / 30.0 * (1.0 + z2 / 56.0 * (1.0 + z2 / 90.0)))
        } else {
            z.cosh() - 1.0 - 0.5 * z * z
        };
        rest * u.powf(-1.0 - alpha)
    };
    Ok(quad::integrate(f, 0.0, 1.0, Tolerance::absolute(1e-14).with_rel(1e-13))?.value)
}

/// b·γ − ∫_{−1}^{1} (e^{−γu} − 1 + γu) κ|u|^{−1−α} du.
pub fn gamma_residual(alpha: StabilityIndex, kappa: f64, b_const: f64, gamma: f64) -> Result<f64> {
    let a = alpha.value();
    let jumps = 2.0 * kappa * (subtracted_integral(gamma, a)? + gamma * gamma / (2.0 * (2.0 - a)));
    Ok(b_const * gamma - jumps)
}

/// Positive root γ of [`gamma_residual`]: the rate of the explicit layer 1 − e^{−γξ}.
pub fn gamma_root(alpha: StabilityIndex, kappa: f64, b_const: f64) -> Result<f64> {
    alpha.require_superlinear()?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::domain(format!("kappa must be positive, got {kappa}")));
    }
    if !(b_const > 0.0 && b_const.is_finite()) {
        return Err(Error::domain(format!("layer drift coefficient must be positive, got {b_const}")));
    }
    let r = |g: f64| gamma_residual(alpha, kappa, b_const, g);
    // the residual is positive on (0, γ*) and negative beyond
    let mut lo = 0.0;
    let mut hi = 1.0;
    while r(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 700.0 {
            return Err(Error::RootNotFound(format!("no sign change of the rate equation below {hi}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if r(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rl, rh) = (r(lo)?, r(hi)?);
    let root = if rl.abs() <= rh.abs() && lo > 0.0 { lo } else { hi };
    let res = r(root)?.abs();
    if res > 1e-10 {
        return Err(Error::RootNotFound(format!("rate equation residual {res:.3e} at γ = {root}")));
    }
    Ok(root)
}

struct Profile<'a>(&'a LayerFunction);

impl NonlocalFn for Profile<'_> {
    fn eval(&self, y: f64) -> f64 {
        self.0.eval(y)
    }
    fn kinks(&self) -> Vec<f64> {
        vec![0.0]
    }
}

/// Residual of a left or right boundary-layer equation at stretched coordinate `s` > 0:
/// c·F'(s) + L F(s) with all-jump compensation, c the (positive) layer drift coefficient.
pub fn layer_residual(layer: &LayerFunction, coefficient: f64, measure: &LevyMeasure, s: f64, quad: &QuadratureConfig) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain("layer residual is evaluated on the positive half-line"));
    }
    let sign = match layer.side {
        LayerSide::Left => 1.0,
        LayerSide::Right => -1.0,
        LayerSide::Internal => return Err(Error::Unsupported("internal layer residual".into())),
    };
    let step = (1e-5f64).min(0.5 * s);
    let slope = match layer.gamma() {
        Some(g) => sign * g * (-g * s).exp(),
        None => (layer.eval(s + step) - layer.eval(s - step)) / (2.0 * step),
    };
    let jumps = apply_generator(&Profile(layer), s, measure, Compensation::AllJumps, quad)?;
    Ok(coefficient * slope + jumps)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SingularOptions {
    pub layer: LayerOptions,
    pub case4: Case4Options,
    /// Solve the layer equations numerically even when an explicit profile exists.
    pub numeric_layers: bool,
}

#[derive(Debug, Clone)]
pub enum Composition {
    Left(LayerFunction),
    Right(LayerFunction),
    Internal(LayerFunction),
    /// `constant` is the interior value for escape to the right.
    Balanced { constant: f64, left: LayerFunction, right: LayerFunction },
}

#[derive(Debug, Clone)]
pub struct SingularExpansion {
    pub case: CaseLabel,
    pub epsilon: f64,
    /// Stretching exponent of the layer(s).
    pub beta: f64,
    pub gamma: Option<f64>,
    pub constant: Option<Case4Constant>,
    pub composition: Composition,
    domain: (f64, f64),
    exterior: (f64, f64),
}

impl SingularExpansion {
    pub fn evaluate(&self, x: f64) -> f64 {
        let (a, b) = self.domain;
        let (l, r) = self.exterior;
        if x <= a {
            return l;
        }
        if x >= b {
            return r;
        }
        let e = self.epsilon;
        let q = match &self.composition {
            Composition::Left(f) | Composition::Right(f) | Composition::Internal(f) => f.eval_physical(x, e),
            Composition::Balanced { constant, left, right } => {
                constant * left.eval_physical(x, e) + (1.0 - constant) * right.eval_physical(x, e)
            }
        };
        l + (r - l) * q
    }

    /// Interior value C for the problem's own target (Case4 only).
    pub fn interior_constant(&self) -> Option<f64> {
        match &self.composition {
            Composition::Balanced { constant, .. } => {
                let (l, r) = self.exterior;
                Some(l + (r - l) * constant)
            }
            _ => None,
        }
    }
}

/// Left (F) or right (G) boundary layer of `problem`, anchored at A or B.
pub(crate) fn boundary_layer(problem: &EscapeProblem, side: LayerSide, opts: &SingularOptions) -> Result<LayerFunction> {
    let (a, b) = problem.domain();
    let measure = problem.measure();
    let alpha = measure.alpha();
    let beta = alpha.layer_exponent()?;
    let (anchor, drift) = match side {
        LayerSide::Left => (a, problem.b(a)),
        LayerSide::Right => (b, problem.b(b)),
        LayerSide::Internal => return Err(Error::domain("boundary layer requested for the internal side")),
    };
    let coefficient = if side == LayerSide::Left { drift } else { -drift };
    let mut layer = match measure {
        LevyMeasure::TruncatedPowerLaw { kappa, .. } if !opts.numeric_layers => {
            let gamma = gamma_root(alpha, *kappa, coefficient)?;
            LayerFunction::explicit(side, gamma, beta, anchor)?
        }
        _ => solve_layer_problem(LayerDrift::Constant(drift), measure, side, &opts.layer)?,
    };
    layer.anchor = anchor;
    Ok(layer)
}

pub fn singular_expansion(problem: &EscapeProblem, case: &CaseLabel, opts: &SingularOptions) -> Result<SingularExpansion> {
    if !problem.diffusion().is_zero() {
        return Err(Error::domain("layer expansions assume zero diffusion"));
    }
    let alpha = problem.alpha();
    alpha.require_superlinear()?;
    let beta = alpha.layer_exponent()?;
    let mut out = SingularExpansion {
        case: case.clone(),
        epsilon: problem.epsilon(),
        beta,
        gamma: None,
        constant: None,
        composition: Composition::Left(LayerFunction::explicit(LayerSide::Left, 1.0, beta, 0.0)?),
        domain: problem.domain(),
        exterior: problem.exterior_values(),
    };
    match case {
        CaseLabel::PositiveDrift => {
            let f = boundary_layer(problem, LayerSide::Left, opts)?;
            out.gamma = f.gamma();
            out.composition = Composition::Left(f);
        }
        CaseLabel::NegativeDrift => {
            let g = boundary_layer(problem, LayerSide::Right, opts)?;
            out.gamma = g.gamma();
            out.composition = Composition::Right(g);
        }
        CaseLabel::UnstableEquilibrium { x_bar, slope } => {
            let mut h = solve_layer_problem(LayerDrift::Linear(*slope), problem.measure(), LayerSide::Internal, &opts.layer)?;
            h.anchor = *x_bar;
            out.beta = 1.0;
            out.composition = Composition::Internal(h);
        }
        CaseLabel::StableEquilibrium { .. } => {
            let left = boundary_layer(problem, LayerSide::Left, opts)?;
            let right = boundary_layer(problem, LayerSide::Right, opts)?;
            let right_target = problem.with_target(crate::model::Target::RightExterior);
            let c = case4_constant(&right_target, &left, &right, &opts.case4)?;
            out.gamma = left.gamma();
            out.composition = Composition::Balanced { constant: c.value, left, right };
            out.constant = Some(c);
        }
        CaseLabel::Unsupported { reason } => {
            return Err(Error::domain(format!(
                "no layer expansion outside the four single-equilibrium cases: {reason}"
            )))
        }
    }
    Ok(out)
}
