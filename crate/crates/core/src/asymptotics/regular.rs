//! Regular expansion p ≈ p0 + ε^α p1 for problems with nonvanishing diffusion.
//!
//! With φ = 2b/σ², W = e^{−Φ}, Φ(x) = ∫_A^x φ and V(x) = ∫_A^x W:
//!
//! * q0 = V/V(B), p0 = L + (R − L) q0,
//! * g = L_ν p0 with p0 extended by its exterior values,
//! * h = −2g e^{Φ}/σ², J = ∫_A^x h, K = ∫_A^x h V,
//! * p1 = V J − K − q0 (V(B) J(B) − K(B)) + p0,
//!
//! the last form obtained from the nested double integral by exchanging the order of
//! integration. The trailing `+ p0` makes p1 take the exterior values at A and B;
//! the corrected variant drops it so that p1 vanishes at both ends.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp::Hermite;
use crate::model::EscapeProblem;
use crate::quad::{self, Tolerance};
use crate::stable::{self, Compensation, Exterior, LevyMeasure, NonlocalFn, QuadratureConfig, StabilityIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularOptions {
    pub quad: QuadratureConfig,
    /// Impose p1(B) = p1(A) = 0 instead of the exterior values.
    pub corrected_p1_boundary: bool,
    /// Uniform cells between the graded end zones of the cached grid.
    pub cells: usize,
}

impl Default for RegularOptions {
    fn default() -> Self {
        RegularOptions { quad: QuadratureConfig::default(), corrected_p1_boundary: false, cells: 24 }
    }
}

fn cell_tol() -> Tolerance {
    Tolerance::absolute(1e-12).with_rel(1e-11).with_max_segments(400)
}

fn graded_nodes(a: f64, b: f64, cells: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=cells)
        .map(|j| {
            let t = j as f64 / cells as f64;
            a + (b - a) * 0.5 * (1.0 - (std::f64::consts::PI * t).cos())
        })
        .collect();
    v[0] = a;
    v[cells] = b;
    v
}

fn locate(nodes: &[f64], x: f64) -> usize {
    match nodes.partition_point(|&v| v <= x) {
        0 => 0,
        k => (k - 1).min(nodes.len() - 2),
    }
}

/// Leading-order term p0.
#[derive(Debug, Clone)]
pub struct LeadingOrder {
    problem: EscapeProblem,
    nodes: Vec<f64>,
    phi: Vec<f64>,
    v: Vec<f64>,
    q0: Hermite,
}

impl LeadingOrder {
    fn phi_density(&self, u: f64) -> f64 {
        let s = self.problem.sigma(u);
        2.0 * self.problem.b(u) / (s * s)
    }

    /// Φ(x) = ∫_A^x φ.
    pub fn potential(&self, x: f64) -> Result<f64> {
        let k = locate(&self.nodes, x);
        Ok(self.phi[k] + quad::integrate(|u| self.phi_density(u), self.nodes[k], x, cell_tol())?.value)
    }

    /// V(x) = ∫_A^x e^{−Φ}.
    pub fn volume(&self, x: f64) -> Result<f64> {
        let k = locate(&self.nodes, x);
        let w = |s: f64| (-self.potential(s).unwrap_or(f64::NAN)).exp();
        Ok(self.v[k] + quad::integrate(w, self.nodes[k], x, cell_tol())?.value)
    }

    pub fn total_volume(&self) -> f64 {
        *self.v.last().unwrap()
    }

    /// Normalized profile q0 ∈ [0, 1] (0 at A, 1 at B).
    pub fn q0(&self, x: f64) -> f64 {
        let (a, b) = self.problem.domain();
        if x <= a {
            0.0
        } else if x >= b {
            1.0
        } else {
            self.q0.eval(x).unwrap_or(f64::NAN)
        }
    }

    /// p0 including its exterior values.
    pub fn eval(&self, x: f64) -> f64 {
        let (l, r) = self.problem.exterior_values();
        l + (r - l) * self.q0(x)
    }

    pub fn problem(&self) -> &EscapeProblem {
        &self.problem
    }
}

impl NonlocalFn for LeadingOrder {
    fn eval(&self, y: f64) -> f64 {
        LeadingOrder::eval(self, y)
    }

    fn kinks(&self) -> Vec<f64> {
        let (a, b) = self.problem.domain();
        vec![a, b]
    }

    fn exterior(&self) -> Option<Exterior> {
        let (a, b) = self.problem.domain();
        let (left, right) = self.problem.exterior_values();
        Some(Exterior { a, b, left, right })
    }
}

fn check_diffusion(problem: &EscapeProblem) -> Result<()> {
    let (a, b) = problem.domain();
    for k in 0..=1024 {
        let x = a + (b - a) * k as f64 / 1024.0;
        let s = problem.diffusion().eval(x)?;
        if s == 0.0 || !s.is_finite() {
            return Err(Error::domain(format!("regular expansion needs nonvanishing diffusion; sigma({x}) = {s}")));
        }
    }
    Ok(())
}

pub fn regular_p0(problem: &EscapeProblem) -> Result<LeadingOrder> {
    regular_p0_with(problem, 160)
}

fn regular_p0_with(problem: &EscapeProblem, cells: usize) -> Result<LeadingOrder> {
    check_diffusion(problem)?;
    let (a, b) = problem.domain();
    let nodes = graded_nodes(a, b, cells.max(4));
    let mut lo = LeadingOrder { problem: problem.clone(), phi: vec![0.0; nodes.len()], v: vec![0.0; nodes.len()], nodes, q0: dummy_table()? };
    for k in 0..cells.max(4) {
        let (x0, x1) = (lo.nodes[k], lo.nodes[k + 1]);
        lo.phi[k + 1] = lo.phi[k] + quad::integrate(|u| lo.phi_density(u), x0, x1, cell_tol())?.value;
    }
    for k in 0..cells.max(4) {
        let (x0, x1) = (lo.nodes[k], lo.nodes[k + 1]);
        let w = |s: f64| (-lo.potential(s).unwrap_or(f64::NAN)).exp();
        lo.v[k + 1] = lo.v[k] + quad::integrate(w, x0, x1, cell_tol())?.value;
    }
    let z = lo.total_volume();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::domain("normalizing integral of the leading-order profile is not finite"));
    }
    // The Hermite table carries exact slopes W/Z; refine the graded grid four-fold for it.
    let mut xs = Vec::new();
    for k in 0..lo.nodes.len() - 1 {
        for j in 0..4 {
            xs.push(lo.nodes[k] + (lo.nodes[k + 1] - lo.nodes[k]) * j as f64 / 4.0);
        }
    }
    xs.push(b);
    let ys = xs.iter().map(|&x| lo.volume(x).map(|v| v / z)).collect::<Result<Vec<_>>>()?;
    let ds = xs.iter().map(|&x| lo.potential(x).map(|p| (-p).exp() / z)).collect::<Result<Vec<_>>>()?;
    lo.q0 = Hermite::new(xs, ys, ds)?;
    Ok(lo)
}

fn dummy_table() -> Result<Hermite> {
    Hermite::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0])
}

/// g(x) = ∫ (p0(x+u) − p0(x) − 1_{|u|≤1} p0'(x) u) ν(du).
pub fn regular_g(p0: &LeadingOrder, x: f64, measure: &LevyMeasure, quad: &QuadratureConfig) -> Result<f64> {
    let (a, b) = p0.problem.domain();
    if !(x > a && x < b) {
        return Err(Error::domain(format!("g is evaluated inside ({a}, {b}), got {x}")));
    }
    stable::apply_generator(p0, x, measure, Compensation::SmallJumpsOnly, quad)
}

/// First correction p1.
#[derive(Debug, Clone)]
pub struct FirstCorrection {
    p0: LeadingOrder,
    measure: LevyMeasure,
    quad: QuadratureConfig,
    corrected: bool,
    rule: (Vec<f64>, Vec<f64>),
    /// Cell boundaries, geometrically graded toward A and B.
    breaks: Vec<f64>,
    j: Vec<f64>,
    k: Vec<f64>,
}

const GL_POINTS: usize = 12;

/// Breakpoints A, A + w, A + 2w, A + 4w, ... , uniform in the middle, mirrored at B.
fn graded_breaks(a: f64, b: f64, middle_cells: usize) -> Vec<f64> {
    let len = b - a;
    let mut near = vec![1e-9 * len];
    while near.last().unwrap() * 2.0 < 0.04 * len {
        let d = near.last().unwrap() * 2.0;
        near.push(d);
    }
    let edge = *near.last().unwrap();
    let mut v = vec![a];
    v.extend(near.iter().map(|d| a + d));
    let m = middle_cells.max(1);
    for i in 1..m {
        v.push(a + edge + (len - 2.0 * edge) * i as f64 / m as f64);
    }
    v.extend(near.iter().rev().map(|d| b - d));
    v.push(b);
    v
}

impl FirstCorrection {
    /// h at u together with V(u).
    fn h_and_v(&self, u: f64) -> Result<(f64, f64)> {
        let s = self.p0.problem.sigma(u);
        let g = regular_g(&self.p0, u, &self.measure, &self.quad)?;
        let phi = self.p0.potential(u)?;
        Ok((-2.0 * g * phi.exp() / (s * s), self.p0.volume(u)?))
    }

    /// (∫h, ∫hV) over [x0, x1] by Gauss-Legendre; u = x0 + t² (resp. x1 − t²) when x0 = A (resp. x1 = B).
    fn piece(&self, x0: f64, x1: f64) -> Result<(f64, f64)> {
        if x1 <= x0 {
            return Ok((0.0, 0.0));
        }
        let (a, b) = self.p0.problem.domain();
        let (nodes, weights) = &self.rule;
        let (mut j, mut k) = (0.0, 0.0);
        let mut add = |u: f64, w: f64| -> Result<()> {
            if u > a && u < b {
                let (h, v) = self.h_and_v(u)?;
                j += w * h;
                k += w * h * v;
            }
            Ok(())
        };
        if x0 == a || x1 == b {
            let top = (x1 - x0).sqrt();
            for (t, w) in nodes.iter().zip(weights) {
                let t = 0.5 * top * (t + 1.0);
                let w = 0.5 * top * w * 2.0 * t;
                add(if x0 == a { a + t * t } else { b - t * t }, w)?;
            }
        } else {
            let (c, r) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
            for (t, w) in nodes.iter().zip(weights) {
                add(c + r * t, r * w)?;
            }
        }
        Ok((j, k))
    }

    fn partials(&self, x: f64) -> Result<(f64, f64)> {
        let (a, b) = self.p0.problem.domain();
        let c = locate(&self.breaks, x);
        // integrate away from the nearer endpoint singularity
        if x - a <= b - x {
            let (j, k) = self.piece(self.breaks[c], x)?;
            Ok((self.j[c] + j, self.k[c] + k))
        } else {
            let (j, k) = self.piece(x, self.breaks[c + 1])?;
            Ok((self.j[c + 1] - j, self.k[c + 1] - k))
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (a, b) = self.p0.problem.domain();
        let (l, r) = self.p0.problem.exterior_values();
        let boundary = |v: f64| if self.corrected { 0.0 } else { v };
        if x <= a {
            return Ok(boundary(l));
        }
        if x >= b {
            return Ok(boundary(r));
        }
        let (j, k) = self.partials(x)?;
        let vb = self.p0.total_volume();
        let tail = vb * self.j.last().unwrap() - self.k.last().unwrap();
        let q0 = self.p0.q0(x);
        let particular = self.p0.volume(x)? * j - k - q0 * tail;
        Ok(particular + boundary(l + (r - l) * q0))
    }
}

pub fn regular_p1(p0: &LeadingOrder, opts: &RegularOptions) -> Result<FirstCorrection> {
    opts.quad.validate()?;
    let (a, b) = p0.problem.domain();
    let breaks = graded_breaks(a, b, opts.cells);
    let mut fc = FirstCorrection {
        p0: p0.clone(),
        measure: *p0.problem.measure(),
        quad: opts.quad,
        corrected: opts.corrected_p1_boundary,
        rule: quad::gauss_legendre(GL_POINTS),
        j: vec![0.0; breaks.len()],
        k: vec![0.0; breaks.len()],
        breaks,
    };
    let pieces = (0..fc.breaks.len() - 1)
        .into_par_iter()
        .map(|c| fc.piece(fc.breaks[c], fc.breaks[c + 1]))
        .collect::<Result<Vec<_>>>()?;
    for (c, (j, k)) in pieces.into_iter().enumerate() {
        fc.j[c + 1] = fc.j[c] + j;
        fc.k[c + 1] = fc.k[c] + k;
    }
    Ok(fc)
}

#[derive(Debug, Clone)]
pub struct RegularExpansion {
    pub p0: LeadingOrder,
    pub p1: FirstCorrection,
    pub epsilon: f64,
    pub alpha: StabilityIndex,
}

impl RegularExpansion {
    /// p0(x) + ε^α p1(x).
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let p0 = self.p0.eval(x);
        if self.epsilon == 0.0 {
            return Ok(p0);
        }
        Ok(p0 + self.epsilon.powf(self.alpha.value()) * self.p1.eval(x)?)
    }

    /// The same expansion at another noise level (p0 and p1 do not depend on ε).
    pub fn at_epsilon(&self, epsilon: f64) -> Self {
        RegularExpansion { epsilon, ..self.clone() }
    }

    pub fn evaluate_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.par_iter().map(|&x| self.evaluate(x)).collect()
    }
}

pub fn regular_expansion(problem: &EscapeProblem, opts: &RegularOptions) -> Result<RegularExpansion> {
    let p0 = regular_p0(problem)?;
    let p1 = regular_p1(&p0, opts)?;
    Ok(RegularExpansion { p0, p1, epsilon: problem.epsilon(), alpha: problem.alpha() })
}

/// Closed-form p1 for unit Brownian motion plus stable noise on (−1, 1) escaping to the right.
pub fn brownian_p1_closed_form(x: f64, alpha: StabilityIndex) -> Result<f64> {
    let a = alpha.value();
    if a == 1.0 {
        return Err(Error::domain("closed form is singular at alpha = 1"));
    }
    if x <= -1.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    let c = stable::stable_constant(alpha);
    let bracket = (1.0 - x).powf(3.0 - a) - 2f64.powf(3.0 - a) + (3.0 - a) * 2f64.powf(2.0 - a) * (x + 1.0)
        - (1.0 + x).powf(3.0 - a);
    let first = c / ((-a) * (1.0 - a) * (2.0 - a) * (3.0 - a)) * bracket;
    let second = -(x + 1.0) / 2.0 * c / ((-a) * (2.0 - a) * (3.0 - a)) * 2f64.powf(3.0 - a);
    Ok(first + second + (x + 1.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiffusionSpec, DriftSpec, Target};

    fn idx(a: f64) -> StabilityIndex {
        StabilityIndex::new(a).unwrap()
    }

    #[test]
    fn closed_form_boundary_values() {
        for a in [0.5, 1.5] {
            assert!(brownian_p1_closed_form(-1.0 + 1e-15, idx(a)).unwrap().abs() < 1e-12);
            assert!((brownian_p1_closed_form(1.0 - 1e-15, idx(a)).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(brownian_p1_closed_form(0.0, idx(1.0)).is_err());
    }

    #[test]
    fn closed_form_solves_the_correction_equation() {
        // ½ p1'' + g = 0 with g(x) = (C/2)((x+1)^{1−α} − (1−x)^{1−α})/(α(α−1))
        for a in [0.5, 1.5] {
            let c = stable::stable_constant(idx(a));
            for x in [-0.6, -0.1, 0.3, 0.8] {
                let h = 1e-4;
                let f = |y: f64| brownian_p1_closed_form(y, idx(a)).unwrap();
                let p2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
                let g = 0.5 * c * ((x + 1.0).powf(1.0 - a) - (1.0 - x).powf(1.0 - a)) / (a * (a - 1.0));
                assert!((0.5 * p2 + g).abs() < 1e-5, "alpha {a} x {x}: {}", 0.5 * p2 + g);
            }
        }
    }

    #[test]
    fn p0_examples() {
        let p = EscapeProblem::brownian_with_stable_noise(1.5, 0.01).unwrap();
        let p0 = regular_p0(&p).unwrap();
        for x in [-0.9, -0.3, 0.0, 0.7] {
            assert!((p0.eval(x) - 0.5 * (x + 1.0)).abs() < 1e-12);
        }
        assert_eq!(p0.eval(-1.0), 0.0);
        assert_eq!(p0.eval(1.0), 1.0);

        let m = LevyMeasure::full(idx(1.5));
        let ou = EscapeProblem::new(DriftSpec::LinearOu, DiffusionSpec::Constant(1.0), 0.1, m, (-1.0, 1.0), Target::RightExterior)
            .unwrap();
        let p0 = regular_p0(&ou).unwrap();
        assert!((p0.eval(0.0) - 0.5).abs() < 1e-12);
        // direct oracle: ∫_{-1}^{x} e^{s²} ds / ∫_{-1}^{1} e^{s²} ds
        let tol = Tolerance::absolute(1e-13).with_rel(1e-13);
        let z = quad::integrate(|s: f64| (s * s).exp(), -1.0, 1.0, tol).unwrap().value;
        for x in [-0.8, -0.2, 0.5] {
            let num = quad::integrate(|s: f64| (s * s).exp(), -1.0, x, tol).unwrap().value;
            assert!((p0.eval(x) - num / z).abs() < 1e-10);
        }
        let mut prev = 0.0;
        for k in 0..=200 {
            let v = p0.eval(-1.0 + k as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn vanishing_diffusion_rejected() {
        let p = EscapeProblem::truncated_ou(1.5, 0.1, 1.0).unwrap();
        assert!(matches!(regular_p0(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn g_matches_closed_form_and_is_odd() {
        let q = QuadratureConfig::default();
        for a in [0.5, 1.5] {
            let p = EscapeProblem::brownian_with_stable_noise(a, 0.01).unwrap();
            let p0 = regular_p0(&p).unwrap();
            let c = stable::stable_constant(idx(a));
            for x in [-0.95, -0.5, 0.0, 0.25, 0.9] {
                let g = regular_g(&p0, x, p.measure(), &q).unwrap();
                let exact = 0.5 * c * ((x + 1.0).powf(1.0 - a) - (1.0 - x).powf(1.0 - a)) / (a * (a - 1.0));
                assert!((g - exact).abs() < 1e-6, "alpha {a} x {x}: {g} vs {exact}");
                let gm = regular_g(&p0, -x, p.measure(), &q).unwrap();
                assert!((g + gm).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn p1_matches_closed_form() {
        for a in [0.5, 1.5] {
            let p = EscapeProblem::brownian_with_stable_noise(a, 0.01).unwrap();
            let e = regular_expansion(&p, &RegularOptions::default()).unwrap();
            for k in 1..=21 {
                let x = -1.0 + 2.0 * k as f64 / 22.0;
                let v = e.p1.eval(x).unwrap();
                let exact = brownian_p1_closed_form(x, idx(a)).unwrap();
                assert!((v - exact).abs() < 1e-6, "alpha {a} x {x}: {v} vs {exact}");
            }
            assert_eq!(e.p1.eval(-1.0).unwrap(), 0.0);
            assert_eq!(e.p1.eval(1.0).unwrap(), 1.0);
            assert_eq!(e.at_epsilon(0.0).evaluate(0.3).unwrap(), e.p0.eval(0.3));
        }
    }

    #[test]
    fn corrected_boundary_drops_the_homogeneous_term() {
        let p = EscapeProblem::brownian_with_stable_noise(1.5, 0.01).unwrap();
        let base = regular_expansion(&p, &RegularOptions::default()).unwrap();
        let corr = regular_expansion(&p, &RegularOptions { corrected_p1_boundary: true, ..Default::default() }).unwrap();
        for x in [-0.5, 0.2] {
            let d = base.p1.eval(x).unwrap() - corr.p1.eval(x).unwrap();
            assert!((d - 0.5 * (x + 1.0)).abs() < 1e-10);
        }
        assert_eq!(corr.p1.eval(1.0).unwrap(), 0.0);
    }
}
