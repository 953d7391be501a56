//! Uniform-grid discretization of exterior-value problems
//!
//!   b(x) u' + ½σ²(x) u'' + λ (L u)(x) = 0 on (a, b),  u = left on (−∞, a], u = right on [b, ∞).
//!
//! The nonlocal term is written as ∫_0^∞ G(u) u² ν(u) du with G(u) = D(u)/u² and
//! D(u) = u(x+u) + u(x−u) − 2u(x). G is interpolated linearly between the grid
//! offsets u_k = kh (G_0 := G_1, the three-point second difference) and integrated
//! exactly against the weight u²ν(u). Beyond the offset where both x ± u are exterior,
//! D is constant and its tail mass is added in closed form.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::linalg::DenseSystem;
use crate::model::EscapeProblem;
use crate::quad::gauss_legendre;
use crate::stable::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftScheme {
    Central,
    Upwind,
}

impl DriftScheme {
    pub fn name(self) -> &'static str {
        match self {
            DriftScheme::Central => "central",
            DriftScheme::Upwind => "upwind",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub residual_inf_norm: f64,
    pub grid_h: f64,
    pub assembly_time: Duration,
    pub solve_time: Duration,
    pub condition_estimate: f64,
    pub drift_scheme: DriftScheme,
    /// Set when the central scheme produced a non-monotone profile and was replaced.
    pub upwind_fallback: bool,
}

/// Coefficients of a one-dimensional exterior-value problem.
pub struct ExteriorOperator<'a> {
    pub a: f64,
    pub b: f64,
    pub drift: &'a dyn Fn(f64) -> f64,
    pub diffusion: &'a dyn Fn(f64) -> f64,
    /// Multiplies the nonlocal term (ε^α for the escape problem).
    pub jump_intensity: f64,
    pub kernel: Kernel,
    pub left: f64,
    pub right: f64,
}

struct ProductWeights {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Weights of the hat functions on [u_k, u_{k+1}] against c·u^{1−α} (one side of the kernel).
fn product_weights(kernel: &Kernel, h: f64, segments: usize) -> ProductWeights {
    let (c, a) = (kernel.coefficient, kernel.alpha);
    let cut = kernel.cutoff.unwrap_or(f64::INFINITY);
    let (gx, gw) = gauss_legendre(8);
    let mut lower = vec![0.0; segments];
    let mut upper = vec![0.0; segments];
    let m = h.min(cut);
    lower[0] = c * (h * m.powf(2.0 - a) / (2.0 - a) - m.powf(3.0 - a) / (3.0 - a)) / h;
    upper[0] = c * m.powf(3.0 - a) / ((3.0 - a) * h);
    for k in 1..segments {
        let u0 = k as f64 * h;
        let u1 = (k + 1) as f64 * h;
        let top = u1.min(cut);
        if top <= u0 {
            break;
        }
        let (mid, half) = (0.5 * (u0 + top), 0.5 * (top - u0));
        let (mut lo, mut hi) = (0.0, 0.0);
        for (x, w) in gx.iter().zip(&gw) {
            let u = mid + half * x;
            let weight = w * half * c * u.powf(1.0 - a);
            lo += weight * (u1 - u) / h;
            hi += weight * (u - u0) / h;
        }
        lower[k] = lo;
        upper[k] = hi;
    }
    ProductWeights { lower, upper }
}

/// Assemble the dense system for `op` on `n` interior nodes.
pub fn assemble_operator(op: &ExteriorOperator<'_>, n: usize, scheme: DriftScheme) -> Result<DenseSystem> {
    if n < 3 {
        return Err(Error::domain(format!("grid needs at least 3 interior nodes, got {n}")));
    }
    let h = (op.b - op.a) / (n + 1) as f64;
    let mut sys = DenseSystem::zeros(n);
    let weights = (op.jump_intensity != 0.0).then(|| product_weights(&op.kernel, h, n + 1));
    let mut coef = vec![0.0; n + 2];

    for i in 1..=n {
        let x = op.a + i as f64 * (op.b - op.a) / (n + 1) as f64;
        let row = i - 1;
        let mut diag = 0.0;
        let mut rhs = 0.0;
        // contribution c·P(j) of the value at grid index j (0 and n+1 are exterior)
        let mut add = |j: isize, c: f64, diag: &mut f64, rhs: &mut f64| {
            if j == i as isize {
                *diag += c;
            } else if j <= 0 {
                *rhs -= c * op.left;
            } else if j > n as isize {
                *rhs -= c * op.right;
            } else {
                let col = (j - 1) as usize;
                let v = sys.matrix.read(row, col);
                sys.matrix.write(row, col, v + c);
            }
        };

        let bx = (op.drift)(x);
        let sx = (op.diffusion)(x);
        if !bx.is_finite() || !sx.is_finite() {
            return Err(Error::domain(format!("non-finite coefficients at x = {x}")));
        }
        let ii = i as isize;
        match scheme {
            DriftScheme::Central => {
                add(ii + 1, bx / (2.0 * h), &mut diag, &mut rhs);
                add(ii - 1, -bx / (2.0 * h), &mut diag, &mut rhs);
            }
            DriftScheme::Upwind if bx >= 0.0 => {
                add(ii + 1, bx / h, &mut diag, &mut rhs);
                add(ii, -bx / h, &mut diag, &mut rhs);
            }
            DriftScheme::Upwind => {
                add(ii, bx / h, &mut diag, &mut rhs);
                add(ii - 1, -bx / h, &mut diag, &mut rhs);
            }
        }
        let d = 0.5 * sx * sx / (h * h);
        if d != 0.0 {
            add(ii + 1, d, &mut diag, &mut rhs);
            add(ii - 1, d, &mut diag, &mut rhs);
            add(ii, -2.0 * d, &mut diag, &mut rhs);
        }

        if let Some(w) = &weights {
            let k_max = i.max(n + 1 - i);
            // coefficients of G_k, k = 1..=k_max, with G_0 folded into G_1
            coef[..=k_max].iter_mut().for_each(|c| *c = 0.0);
            coef[1] = w.lower[0] + w.upper[0];
            for k in 1..k_max {
                coef[k] += w.lower[k];
                coef[k + 1] += w.upper[k];
            }
            let lam = op.jump_intensity;
            for k in 1..=k_max {
                let mut e = coef[k] / ((k as f64 * h) * (k as f64 * h));
                if k == k_max {
                    e += op.kernel.tail(k as f64 * h);
                }
                let e = lam * e;
                if e == 0.0 {
                    continue;
                }
                let kk = k as isize;
                add(ii + kk, e, &mut diag, &mut rhs);
                add(ii - kk, e, &mut diag, &mut rhs);
                add(ii, -2.0 * e, &mut diag, &mut rhs);
            }
        }
        let v = sys.matrix.read(row, row);
        sys.matrix.write(row, row, v + diag);
        sys.rhs[row] = rhs;
    }
    Ok(sys)
}

fn check_problem(problem: &EscapeProblem) -> Result<()> {
    if problem.diffusion().is_zero() {
        problem.alpha().require_superlinear()?;
    }
    Ok(())
}

fn escape_operator<'a>(
    problem: &'a EscapeProblem,
    drift: &'a dyn Fn(f64) -> f64,
    diffusion: &'a dyn Fn(f64) -> f64,
) -> ExteriorOperator<'a> {
    let (a, b) = problem.domain();
    let (left, right) = problem.exterior_values();
    ExteriorOperator {
        a,
        b,
        drift,
        diffusion,
        jump_intensity: problem.epsilon().powf(problem.alpha().value()),
        kernel: problem.measure().kernel(),
        left,
        right,
    }
}

/// Dense system M p = r for the escape probability on `n` interior nodes.
///
/// Pure-jump problems (zero diffusion) need 1 < α < 2.
pub fn assemble_system(problem: &EscapeProblem, n: usize, scheme: DriftScheme) -> Result<DenseSystem> {
    check_problem(problem)?;
    let drift = |x: f64| problem.b(x);
    let diffusion = |x: f64| problem.sigma(x);
    assemble_operator(&escape_operator(problem, &drift, &diffusion), n, scheme)
}

/// Solve for p on `n` interior nodes.
///
/// If the drift keeps one strict sign on the grid and the central scheme returns a
/// non-monotone profile, the system is reassembled with first-order upwinding; the
/// report records the switch.
pub fn solve_escape_probability(problem: &EscapeProblem, n: usize) -> Result<(GridFunction, SolverReport)> {
    let (grid, report) = solve_with_scheme(problem, n, DriftScheme::Central)?;
    let signs: Vec<f64> = grid.nodes().iter().map(|&x| problem.b(x).signum()).collect();
    let one_sign = problem.diffusion().is_zero() && signs.iter().all(|s| *s != 0.0 && *s == signs[0]);
    if one_sign && !is_monotone(&grid, problem.exterior_values(), 1e-10) {
        let (grid, mut up) = solve_with_scheme(problem, n, DriftScheme::Upwind)?;
        up.upwind_fallback = true;
        up.assembly_time += report.assembly_time;
        up.solve_time += report.solve_time;
        return Ok((grid, up));
    }
    Ok((grid, report))
}

fn is_monotone(g: &GridFunction, (left, right): (f64, f64), tol: f64) -> bool {
    let dir = (right - left).signum();
    let mut prev = left;
    for &v in g.values().iter().chain(std::iter::once(&right)) {
        if dir * (v - prev) < -tol {
            return false;
        }
        prev = v;
    }
    true
}

pub fn solve_with_scheme(problem: &EscapeProblem, n: usize, scheme: DriftScheme) -> Result<(GridFunction, SolverReport)> {
    let t0 = Instant::now();
    let sys = assemble_system(problem, n, scheme)?;
    let assembly_time = t0.elapsed();
    let t1 = Instant::now();
    let sol = sys.solve()?;
    let solve_time = t1.elapsed();
    let (a, b) = problem.domain();
    let (left, right) = problem.exterior_values();
    let grid = GridFunction::new(a, b, sol.x, left, right)?;
    let report = SolverReport {
        residual_inf_norm: sol.residual,
        grid_h: grid.h(),
        assembly_time,
        solve_time,
        condition_estimate: sol.condition,
        drift_scheme: scheme,
        upwind_fallback: false,
    };
    Ok((grid, report))
}

/// ‖M v − r‖_∞ for the assembled system applied to the grid samples of `f`.
pub fn operator_residual(problem: &EscapeProblem, n: usize, f: impl Fn(f64) -> f64) -> Result<f64> {
    let sys = assemble_system(problem, n, DriftScheme::Central)?;
    let (a, b) = problem.domain();
    let v: Vec<f64> = (1..=n).map(|i| f(a + i as f64 * (b - a) / (n + 1) as f64)).collect();
    Ok(sys.residual(&v))
}
