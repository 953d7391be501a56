//! Interior constant C of the stable-equilibrium composition C·F + (1 − C)·G.
//!
//! Two linear equations in C are evaluated, both built from the stationary density ρ
//! of the Ornstein-Uhlenbeck drift b(x) = −x:
//!
//! * `Balanced`: ∫ ρ (A p) over the exterior vanishes, A being the full generator; this
//!   is the adjoint identity over the whole line restricted to where A p ≠ 0.
//! * `Printed`: the half-line form
//!   −ε^{−α}ρ(B)/C_{1,α} + (1/α)∫_A^B ρ(x)(B − x)^{−α} dx = ∫_A^B p(x) E(x) dx,
//!   E(x) = ∫_{|y| outside (A, B)} ρ(y)|y − x|^{−1−α} dy, with the divergent endpoint
//!   integrals read as Hadamard finite parts.
//!
//! Both are evaluated at ε and ε/2 and extrapolated assuming an O(ε^α) error.

use rayon::prelude::*;

use crate::asymptotics::stationary::StationaryDensity;
use crate::error::{Error, Result};
use crate::layer::LayerFunction;
use crate::model::{DriftSpec, EscapeProblem, Target};
use crate::quad::{self, Tolerance};
use crate::stable::stable_constant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Case4Formula {
    #[default]
    Balanced,
    Printed,
}

impl Case4Formula {
    pub fn name(self) -> &'static str {
        match self {
            Case4Formula::Balanced => "balanced",
            Case4Formula::Printed => "printed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Case4Options {
    /// Noise level of the first evaluation; the problem's ε when unset.
    pub epsilon_eval: Option<f64>,
    pub formula: Case4Formula,
    /// Report the raw value at `epsilon_eval` instead of the extrapolation.
    pub no_extrapolation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case4Constant {
    /// Value used in the composition.
    pub value: f64,
    pub formula: Case4Formula,
    /// (ε, ε/2).
    pub epsilons: [f64; 2],
    pub balanced: [f64; 2],
    pub printed: [f64; 2],
    pub balanced_extrapolated: f64,
    pub printed_extrapolated: f64,
}

struct Terms {
    balanced: f64,
    printed: f64,
}

const GL_POINTS: usize = 12;

/// Nodes and weights on (A, B): geometric cells toward both ends, t² substitution in the outermost ones.
fn graded_rule(a: f64, b: f64) -> Vec<(f64, f64)> {
    let len = b - a;
    let mut d = vec![1e-12 * len];
    while d.last().unwrap() * 2.0 < 0.05 * len {
        let next = d.last().unwrap() * 2.0;
        d.push(next);
    }
    let edge = *d.last().unwrap();
    let mut breaks = vec![a];
    breaks.extend(d.iter().map(|v| a + v));
    let middle = 32;
    for i in 1..middle {
        breaks.push(a + edge + (len - 2.0 * edge) * i as f64 / middle as f64);
    }
    breaks.extend(d.iter().rev().map(|v| b - v));
    breaks.push(b);

    let (gx, gw) = quad::gauss_legendre(GL_POINTS);
    let mut rule = Vec::new();
    let last = breaks.len() - 2;
    for (c, w) in breaks.windows(2).enumerate() {
        let (x0, x1) = (w[0], w[1]);
        for (t, wt) in gx.iter().zip(&gw) {
            if c == 0 || c == last {
                let top = (x1 - x0).sqrt();
                let t = 0.5 * top * (t + 1.0);
                let weight = 0.5 * top * wt * 2.0 * t;
                let y = if c == 0 { a + t * t } else { b - t * t };
                // nodes that round onto an endpoint carry negligible weight
                if y > a && y < b {
                    rule.push((y, weight));
                }
            } else {
                let (m, r) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
                rule.push((m + r * t, r * wt));
            }
        }
    }
    rule
}

/// ∫_0^1 d (g + d)^{−1−α} dd.
fn linear_moment(g: f64, a: f64) -> f64 {
    let g1 = g + 1.0;
    (g1.powf(1.0 - a) - g.powf(1.0 - a)) / (1.0 - a) + g * (g1.powf(-a) - g.powf(-a)) / a
}

/// ∫_0^δ d² (g + d)^{−1−α} dd.
fn quadratic_moment(g: f64, delta: f64, a: f64) -> f64 {
    let prim = |v: f64| v.powf(2.0 - a) / (2.0 - a) - 2.0 * g * v.powf(1.0 - a) / (1.0 - a) - g * g * v.powf(-a) / a;
    prim(g + delta) - prim(g)
}

/// Below this distance the density is replaced by its second-order Taylor polynomial.
const TAYLOR_ZONE: f64 = 1e-4;

/// ∫_0^∞ (ρ(end + o·d) − ρ(end)) (gap + d)^{−1−α} dd for the outward direction o = ±1.
///
/// The linear part of ρ on d < 1 is integrated in closed form, and so is the quadratic
/// part on d < [`TAYLOR_ZONE`], where differences of ρ are dominated by roundoff.
fn regular_part(rho: &StationaryDensity, end: f64, outward: f64, gap: f64, alpha: f64, far: f64) -> Result<f64> {
    let r0 = rho.eval(end);
    let r1 = outward * rho.derivative(end);
    let h = TAYLOR_ZONE;
    let r2 = outward * (rho.derivative(end + outward * h) - rho.derivative(end)) / h;
    let f = |d: f64| {
        let lin = if d < 1.0 { r1 * d } else { 0.0 };
        (rho.eval(end + outward * d) - r0 - lin) * (gap + d).powf(-1.0 - alpha)
    };
    let mut breaks = quad::log_spaced(TAYLOR_ZONE, far, 8);
    breaks.push(1.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let v = quad::integrate_breaks(f, &breaks, Tolerance::absolute(1e-11).with_rel(1e-8))?.value;
    // beyond `far` only the subtracted constant matters
    Ok(v + 0.5 * r2 * quadratic_moment(gap, h, alpha) + r1 * linear_moment(gap, alpha) - r0 * (gap + far).powf(-alpha) / alpha)
}

/// ∫_0^∞ ρ(end ∓ d) (span + d)^{−α}/α dd.
fn exterior_mass(rho: &StationaryDensity, end: f64, outward: f64, span: f64, alpha: f64, far: f64) -> Result<f64> {
    let f = |d: f64| rho.eval(end + outward * d) * (span + d).powf(-alpha) / alpha;
    let mut breaks = vec![0.0];
    breaks.extend(quad::log_spaced(1e-6, far, 8));
    Ok(quad::integrate_breaks(f, &breaks, Tolerance::absolute(1e-12).with_rel(1e-10))?.value)
}

fn solve_at(problem: &EscapeProblem, left: &LayerFunction, right: &LayerFunction, eps: f64) -> Result<Terms> {
    let (a, b) = problem.domain();
    let alpha = problem.alpha().value();
    let c1 = stable_constant(problem.alpha());
    let rho = StationaryDensity::new(problem.alpha(), eps)?;
    let far = 1e4 * (b - a).max(1.0);

    let f_b = left.eval_physical(b, eps);
    let g_a = right.eval_physical(a, eps);
    if !(f_b > 0.0 && g_a < 1.0) {
        return Err(Error::EstimateUnavailable("layer profiles do not separate the two ends".into()));
    }
    let q1 = |y: f64| left.eval_physical(y, eps) / f_b;
    let q2 = |y: f64| (right.eval_physical(y, eps) - g_a) / (1.0 - g_a);
    let (rho_a, rho_b) = (rho.eval(a), rho.eval(b));

    let rule = graded_rule(a, b);
    // per node: [a1, a2, b1, b2, finite-part remainder of ∫E_right, finite-part remainder of ∫ρ(B−x)^{−α}]
    let sums = rule
        .par_iter()
        .map(|&(y, w)| -> Result<[f64; 6]> {
            let reg_l = regular_part(&rho, a, -1.0, y - a, alpha, far)?;
            let reg_r = regular_part(&rho, b, 1.0, b - y, alpha, far)?;
            let pl = reg_l + rho_a * (y - a).powf(-alpha) / alpha;
            let pr = reg_r + rho_b * (b - y).powf(-alpha) / alpha;
            let (u1, u2) = (q1(y), q2(y));
            Ok([
                w * u1 * pl,
                w * u2 * pl,
                w * (u1 - 1.0) * pr,
                w * (u2 - 1.0) * pr,
                w * reg_r,
                w * (rho.eval(y) - rho_b) * (b - y).powf(-alpha),
            ])
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold([0.0; 6], |mut acc, v| {
            for (s, x) in acc.iter_mut().zip(v) {
                *s += x;
            }
            acc
        });
    let [a1, a2, b1, b2, fp_right, fp_density] = sums;
    let denom = a1 + b1 - a2 - b2;
    if !(denom.abs() > 1e-12 * (a1.abs() + b1.abs() + a2.abs() + b2.abs())) {
        return Err(Error::EstimateUnavailable("the two layer contributions cannot be separated".into()));
    }

    let e_left = exterior_mass(&rho, a, -1.0, b - a, alpha, far)?;
    let e_right = exterior_mass(&rho, b, 1.0, b - a, alpha, far)?;
    let balanced = (e_right - e_left - a2 - b2) / denom;

    let span_fp = (b - a).powf(1.0 - alpha) / (1.0 - alpha);
    let lhs = -eps.powf(-alpha) * rho_b / c1 + (fp_density + rho_b * span_fp) / alpha;
    let rhs_fixed = fp_right + rho_b / alpha * span_fp;
    let printed = (lhs - rhs_fixed - a2 - b2) / denom;
    Ok(Terms { balanced, printed })
}

fn extrapolate(alpha: f64, coarse: f64, fine: f64) -> f64 {
    let r = 2f64.powf(alpha);
    (r * fine - coarse) / (r - 1.0)
}

/// C for escape to the right through the Case4 composition with the given layers.
///
/// For a left target the interior value is 1 − C.
pub fn case4_constant(problem: &EscapeProblem, left: &LayerFunction, right: &LayerFunction, opts: &Case4Options) -> Result<Case4Constant> {
    if !matches!(problem.drift(), DriftSpec::LinearOu) {
        return Err(Error::Unsupported("the stationary density is only available for the drift b(x) = −x".into()));
    }
    problem.alpha().require_superlinear()?;
    let eps = opts.epsilon_eval.unwrap_or(problem.epsilon());
    if !(eps > 0.0) {
        return Err(Error::domain("the constant is extracted at a positive noise level"));
    }
    let right_problem = problem.with_target(Target::RightExterior);
    let coarse = solve_at(&right_problem, left, right, eps)?;
    let fine = solve_at(&right_problem, left, right, 0.5 * eps)?;
    let alpha = problem.alpha().value();
    let balanced_extrapolated = extrapolate(alpha, coarse.balanced, fine.balanced);
    let printed_extrapolated = extrapolate(alpha, coarse.printed, fine.printed);
    let value = match (opts.formula, opts.no_extrapolation) {
        (Case4Formula::Balanced, false) => balanced_extrapolated,
        (Case4Formula::Balanced, true) => coarse.balanced,
        (Case4Formula::Printed, false) => printed_extrapolated,
        (Case4Formula::Printed, true) => coarse.printed,
    };
    Ok(Case4Constant {
        value,
        formula: opts.formula,
        epsilons: [eps, 0.5 * eps],
        balanced: [coarse.balanced, fine.balanced],
        printed: [coarse.printed, fine.printed],
        balanced_extrapolated,
        printed_extrapolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::singular::{boundary_layer, SingularOptions};
    use crate::layer::LayerSide;

    fn constant_for(problem: &EscapeProblem) -> Case4Constant {
        let o = SingularOptions::default();
        let f = boundary_layer(problem, LayerSide::Left, &o).unwrap();
        let g = boundary_layer(problem, LayerSide::Right, &o).unwrap();
        case4_constant(problem, &f, &g, &Case4Options::default()).unwrap()
    }

    #[test]
    fn symmetric_problem_gives_one_half() {
        let p = EscapeProblem::truncated_ou(1.5, 0.1, 1.0).unwrap();
        let c = constant_for(&p);
        assert!((c.value - 0.5).abs() < 0.02, "{c:?}");
        assert!((c.balanced[0] - 0.5).abs() < 1e-6, "{c:?}");
        assert!(c.printed[0].is_finite());
    }

    #[test]
    fn longer_right_side_lowers_the_constant() {
        let p = EscapeProblem::truncated_ou(1.5, 0.1, 1.0).unwrap().with_domain(-1.0, 1.5).unwrap();
        let c = constant_for(&p);
        assert!(c.value < 0.5 && c.value > 0.0, "{c:?}");
    }

    #[test]
    fn other_drifts_unsupported() {
        let ou = EscapeProblem::truncated_ou(1.5, 0.1, 1.0).unwrap();
        let f = boundary_layer(&ou, LayerSide::Left, &SingularOptions::default()).unwrap();
        let p = EscapeProblem::constant_drift(1.0, 1.5, 0.1, (-1.0, 1.0)).unwrap();
        assert!(matches!(case4_constant(&p, &f, &f, &Case4Options::default()), Err(Error::Unsupported(_))));
    }
}
