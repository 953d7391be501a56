//! Problem definition and drift-based case classification.

use std::fmt;

use crate::error::{Error, Result};
use crate::interp::Hermite;
use crate::stable::{LevyMeasure, StabilityIndex};

#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    Zero,
    Constant(f64),
    /// b(x) = −x
    LinearOu,
    /// b(x) = x(1 − θx) − β x/(x + 1)
    Tumor { theta: f64, beta: f64 },
    /// Monotone cubic through the table; undefined outside it.
    Tabulated(Hermite),
}

impl DriftSpec {
    pub fn tumor(theta: f64, beta: f64) -> Result<Self> {
        tumor_equilibria(theta, beta)?;
        Ok(DriftSpec::Tumor { theta, beta })
    }

    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(DriftSpec::Tabulated(Hermite::monotone(xs, values)?))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            DriftSpec::Zero => Ok(0.0),
            DriftSpec::Constant(c) => Ok(*c),
            DriftSpec::LinearOu => Ok(-x),
            DriftSpec::Tumor { theta, beta } => Ok(x * (1.0 - theta * x) - beta * x / (x + 1.0)),
            DriftSpec::Tabulated(t) => t
                .eval(x)
                .ok_or_else(|| Error::domain(format!("tabulated drift evaluated outside its table at x = {x}"))),
        }
    }

    pub fn is_named(&self) -> bool {
        !matches!(self, DriftSpec::Tabulated(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiffusionSpec {
    Zero,
    Constant(f64),
    Tabulated(Hermite),
}

impl DiffusionSpec {
    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(DiffusionSpec::Tabulated(Hermite::monotone(xs, values)?))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            DiffusionSpec::Zero => Ok(0.0),
            DiffusionSpec::Constant(s) => Ok(*s),
            DiffusionSpec::Tabulated(t) => t
                .eval(x)
                .ok_or_else(|| Error::domain(format!("tabulated diffusion evaluated outside its table at x = {x}"))),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DiffusionSpec::Zero => true,
            DiffusionSpec::Constant(s) => *s == 0.0,
            DiffusionSpec::Tabulated(t) => t.values().iter().all(|v| *v == 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Escape through [B, ∞).
    RightExterior,
    /// Escape through (−∞, A].
    LeftExterior,
}

impl Target {
    /// (value on (−∞, A], value on [B, ∞)).
    pub fn exterior_values(self) -> (f64, f64) {
        match self {
            Target::RightExterior => (0.0, 1.0),
            Target::LeftExterior => (1.0, 0.0),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Target::RightExterior => Target::LeftExterior,
            Target::LeftExterior => Target::RightExterior,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeProblem {
    drift: DriftSpec,
    diffusion: DiffusionSpec,
    epsilon: f64,
    measure: LevyMeasure,
    a: f64,
    b: f64,
    target: Target,
}

impl EscapeProblem {
    pub fn new(
        drift: DriftSpec,
        diffusion: DiffusionSpec,
        epsilon: f64,
        measure: LevyMeasure,
        (a, b): (f64, f64),
        target: Target,
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::domain(format!("domain must satisfy A < B, got ({a}, {b})")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::domain(format!("epsilon must be a nonnegative number, got {epsilon}")));
        }
        if epsilon == 0.0 && diffusion.is_zero() {
            return Err(Error::domain("epsilon = 0 requires a nonzero diffusion"));
        }
        for (name, table) in [
            ("drift", if let DriftSpec::Tabulated(t) = &drift { Some(t) } else { None }),
            ("diffusion", if let DiffusionSpec::Tabulated(t) = &diffusion { Some(t) } else { None }),
        ] {
            if let Some(t) = table {
                let (lo, hi) = t.domain();
                if lo > a || hi < b {
                    return Err(Error::domain(format!("tabulated {name} must cover [{a}, {b}], covers [{lo}, {hi}]")));
                }
            }
        }
        Ok(EscapeProblem { drift, diffusion, epsilon, measure, a, b, target })
    }

    pub fn drift(&self) -> &DriftSpec {
        &self.drift
    }
    pub fn diffusion(&self) -> &DiffusionSpec {
        &self.diffusion
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn alpha(&self) -> StabilityIndex {
        self.measure.alpha()
    }
    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }
    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }
    pub fn target(&self) -> Target {
        self.target
    }
    pub fn exterior_values(&self) -> (f64, f64) {
        self.target.exterior_values()
    }

    /// b at a point of [A, B], where the drift is known to be defined.
    pub(crate) fn b(&self, x: f64) -> f64 {
        self.drift.eval(x.clamp(self.a, self.b)).unwrap_or(f64::NAN)
    }

    pub(crate) fn sigma(&self, x: f64) -> f64 {
        self.diffusion.eval(x.clamp(self.a, self.b)).unwrap_or(f64::NAN)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        EscapeProblem::new(self.drift.clone(), self.diffusion.clone(), epsilon, self.measure, (self.a, self.b), self.target)
    }

    pub fn with_alpha(&self, alpha: StabilityIndex) -> Result<Self> {
        let measure = self.measure.with_alpha(alpha);
        EscapeProblem::new(self.drift.clone(), self.diffusion.clone(), self.epsilon, measure, (self.a, self.b), self.target)
    }

    pub fn with_target(&self, target: Target) -> Self {
        EscapeProblem { target, ..self.clone() }
    }

    pub fn with_domain(&self, a: f64, b: f64) -> Result<Self> {
        EscapeProblem::new(self.drift.clone(), self.diffusion.clone(), self.epsilon, self.measure, (a, b), self.target)
    }

    /// Unit Brownian motion plus ε-scaled stable noise on (−1, 1), escaping to the right.
    pub fn brownian_with_stable_noise(alpha: f64, epsilon: f64) -> Result<Self> {
        let alpha = StabilityIndex::new(alpha)?;
        EscapeProblem::new(
            DriftSpec::Zero,
            DiffusionSpec::Constant(1.0),
            epsilon,
            LevyMeasure::full(alpha),
            (-1.0, 1.0),
            Target::RightExterior,
        )
    }

    /// Pure-jump Ornstein–Uhlenbeck dynamics with the truncated kernel on (−1, 1).
    pub fn truncated_ou(alpha: f64, epsilon: f64, kappa: f64) -> Result<Self> {
        let alpha = StabilityIndex::new(alpha)?;
        EscapeProblem::new(
            DriftSpec::LinearOu,
            DiffusionSpec::Zero,
            epsilon,
            LevyMeasure::truncated(alpha, kappa)?,
            (-1.0, 1.0),
            Target::RightExterior,
        )
    }

    /// Tumor growth model between its two stable states, escaping to extinction (left).
    pub fn tumor(theta: f64, beta: f64, alpha: f64, epsilon: f64) -> Result<Self> {
        let (x1, _, x3) = tumor_equilibria(theta, beta)?;
        let alpha = StabilityIndex::new(alpha)?;
        EscapeProblem::new(
            DriftSpec::tumor(theta, beta)?,
            DiffusionSpec::Zero,
            epsilon,
            LevyMeasure::full(alpha),
            (x1, x3),
            Target::LeftExterior,
        )
    }

    /// Pure-jump problem with constant drift `b` and the full kernel on (a, b_end).
    pub fn constant_drift(b: f64, alpha: f64, epsilon: f64, domain: (f64, f64)) -> Result<Self> {
        let alpha = StabilityIndex::new(alpha)?;
        EscapeProblem::new(
            DriftSpec::Constant(b),
            DiffusionSpec::Zero,
            epsilon,
            LevyMeasure::full(alpha),
            domain,
            Target::RightExterior,
        )
    }
}

/// Roots of the tumor drift: x₁ = 0 < x₂ < x₃.
pub fn tumor_equilibria(theta: f64, beta: f64) -> Result<(f64, f64, f64)> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::domain(format!("tumor model needs 0 < theta < 1, got {theta}")));
    }
    let upper = (theta + 1.0).powi(2) / (4.0 * theta);
    if !(beta > 1.0 && beta < upper) {
        return Err(Error::domain(format!("tumor model needs 1 < beta < {upper}, got {beta}")));
    }
    // θx² − (1 − θ)x + (β − 1) = 0
    let disc = (1.0 - theta).powi(2) - 4.0 * theta * (beta - 1.0);
    if !(disc > 0.0) {
        return Err(Error::domain("tumor model parameters give a double root"));
    }
    let x3 = ((1.0 - theta) + disc.sqrt()) / (2.0 * theta);
    let x2 = (beta - 1.0) / (theta * x3);
    Ok((0.0, x2, x3))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaseLabel {
    /// b > 0 on the whole interval.
    PositiveDrift,
    /// b < 0 on the whole interval.
    NegativeDrift,
    /// One equilibrium with b'(x̄) > 0.
    UnstableEquilibrium { x_bar: f64, slope: f64 },
    /// One equilibrium with b'(x̄) < 0.
    StableEquilibrium { x_bar: f64, slope: f64 },
    Unsupported { reason: String },
}

impl CaseLabel {
    pub fn name(&self) -> &'static str {
        match self {
            CaseLabel::PositiveDrift => "Case1",
            CaseLabel::NegativeDrift => "Case2",
            CaseLabel::UnstableEquilibrium { .. } => "Case3",
            CaseLabel::StableEquilibrium { .. } => "Case4",
            CaseLabel::Unsupported { .. } => "Unsupported",
        }
    }

    pub fn equilibrium(&self) -> Option<f64> {
        match self {
            CaseLabel::UnstableEquilibrium { x_bar, .. } | CaseLabel::StableEquilibrium { x_bar, .. } => Some(*x_bar),
            _ => None,
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseLabel::Unsupported { reason } => write!(f, "Unsupported ({reason})"),
            other => f.write_str(other.name()),
        }
    }
}

pub const DEFAULT_SCAN_POINTS: usize = 2048;

/// Classify with the default scan grid and equilibrium tolerance.
pub fn classify(problem: &EscapeProblem) -> Result<CaseLabel> {
    classify_case(problem, DEFAULT_SCAN_POINTS, None)
}

/// Scan b on `scan_points` interior points of (A, B). `eq_tol` defaults to 1e-9·max|b|.
pub fn classify_case(problem: &EscapeProblem, scan_points: usize, eq_tol: Option<f64>) -> Result<CaseLabel> {
    if scan_points < 2 {
        return Err(Error::domain("scan_points must be at least 2"));
    }
    let (a, b) = problem.domain();
    let drift = problem.drift();
    let h = (b - a) / (scan_points + 1) as f64;
    let xs: Vec<f64> = (1..=scan_points).map(|k| a + k as f64 * h).collect();
    let vals = xs.iter().map(|&x| drift.eval(x)).collect::<Result<Vec<_>>>()?;
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("drift is not finite on the scan grid"));
    }
    let bmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = eq_tol.unwrap_or(1e-9 * bmax);
    let sign = |v: f64| {
        if v > tol {
            1
        } else if v < -tol {
            -1
        } else {
            0
        }
    };
    let signs: Vec<i32> = vals.iter().map(|&v| sign(v)).collect();
    if signs.iter().all(|&s| s == 1) {
        return Ok(CaseLabel::PositiveDrift);
    }
    if signs.iter().all(|&s| s == -1) {
        return Ok(CaseLabel::NegativeDrift);
    }

    let nonzero: Vec<usize> = (0..signs.len()).filter(|&i| signs[i] != 0).collect();
    let changes: Vec<(usize, usize)> = nonzero
        .windows(2)
        .filter(|w| signs[w[0]] != signs[w[1]])
        .map(|w| (w[0], w[1]))
        .collect();
    if changes.len() != 1 {
        let reason = if changes.is_empty() {
            "drift touches zero without changing sign".to_string()
        } else {
            format!("{} sign changes of the drift; more than one equilibrium is out of scope", changes.len())
        };
        return Ok(CaseLabel::Unsupported { reason });
    }
    let (il, ir) = changes[0];
    let (mut lo, mut hi) = (xs[il], xs[ir]);
    let s_lo = signs[il];
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = drift.eval(mid)?;
        if v == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (v > 0.0) == (s_lo > 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_bar = 0.5 * (lo + hi);
    let dh = 1e-6 * (b - a);
    let slope = (drift.eval(x_bar + dh)? - drift.eval(x_bar - dh)?) / (2.0 * dh);
    if slope > 0.0 {
        return Ok(CaseLabel::UnstableEquilibrium { x_bar, slope });
    }
    let (ba, bb) = (drift.eval(a)?, drift.eval(b)?);
    if ba.abs() <= tol || bb.abs() <= tol {
        return Ok(CaseLabel::Unsupported {
            reason: "stable equilibrium with b(A)b(B) = 0 is not covered".to_string(),
        });
    }
    Ok(CaseLabel::StableEquilibrium { x_bar, slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tumor_roots() {
        let (x1, x2, x3) = tumor_equilibria(0.1, 1.2).unwrap();
        assert_eq!(x1, 0.0);
        let disc = 0.81f64 - 0.4 * 0.2;
        assert!((x2 - (0.9 - disc.sqrt()) / 0.2).abs() < 1e-12);
        assert!((x3 - (0.9 + disc.sqrt()) / 0.2).abs() < 1e-12);
        assert!((x2 - 0.2278).abs() < 1e-3 && (x3 - 8.7722).abs() < 1e-3);
        let d = DriftSpec::Tumor { theta: 0.1, beta: 1.2 };
        for x in [x1, x2, x3] {
            assert!(d.eval(x).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn tumor_parameter_guards() {
        // (1 − θ)² = 4θ(β − 1) at the upper bound
        let theta: f64 = 0.1;
        let beta = (theta + 1.0).powi(2) / (4.0 * theta);
        assert!(tumor_equilibria(theta, beta).is_err());
        assert!(tumor_equilibria(0.1, 1.0).is_err());
        assert!(tumor_equilibria(1.0, 1.2).is_err());
    }

    #[test]
    fn tumor_small_beta_limit() {
        let theta = 0.2;
        let (_, x2, x3) = tumor_equilibria(theta, 1.0 + 1e-9).unwrap();
        assert!(x2 > 0.0 && x2 < 1e-8);
        assert!((x3 - (1.0 - theta) / theta).abs() < 1e-7);
    }

    #[test]
    fn named_classifications() {
        let p = EscapeProblem::constant_drift(1.0, 1.5, 0.1, (-1.0, 1.0)).unwrap();
        assert_eq!(classify(&p).unwrap(), CaseLabel::PositiveDrift);
        let p = EscapeProblem::constant_drift(-2.0, 1.5, 0.1, (-1.0, 1.0)).unwrap();
        assert_eq!(classify(&p).unwrap(), CaseLabel::NegativeDrift);
        let p = EscapeProblem::truncated_ou(1.5, 0.1, 1.0).unwrap();
        match classify(&p).unwrap() {
            CaseLabel::StableEquilibrium { x_bar, slope } => {
                assert!(x_bar.abs() < 1e-12);
                assert!((slope + 1.0).abs() < 1e-6);
            }
            other => panic!("{other}"),
        }
        let p = EscapeProblem::tumor(0.1, 1.2, 1.5, 0.1).unwrap();
        let (_, x2, _) = tumor_equilibria(0.1, 1.2).unwrap();
        match classify(&p).unwrap() {
            CaseLabel::UnstableEquilibrium { x_bar, .. } => assert!((x_bar - x2).abs() < 1e-10),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn zero_drift_and_double_equilibria_unsupported() {
        let p = EscapeProblem::brownian_with_stable_noise(1.5, 0.1).unwrap();
        assert!(matches!(classify(&p).unwrap(), CaseLabel::Unsupported { .. }));
        let d = DriftSpec::tabulated(vec![-1.0, -0.5, 0.0, 0.5, 1.0], vec![1.0, -1.0, 1.0, -1.0, 1.0]).unwrap();
        let p = EscapeProblem::new(
            d,
            DiffusionSpec::Zero,
            0.1,
            LevyMeasure::full(StabilityIndex::new(1.5).unwrap()),
            (-1.0, 1.0),
            Target::RightExterior,
        )
        .unwrap();
        match classify(&p).unwrap() {
            CaseLabel::Unsupported { reason } => assert!(reason.contains("4 sign changes"), "{reason}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn stable_equilibrium_with_vanishing_end_drift() {
        let d =DriftSpec::tabulated(vec![-1.0, -0.5, 0.0, 0.5, 1.0], vec![1.0, 0.5, 0.0, -0.5, 0.0]).unwrap();
        let p = EscapeProblem::new(
            d,
            DiffusionSpec::Zero,
            0.1,
            LevyMeasure::full(StabilityIndex::new(1.5).unwrap()),
            (-1.0, 1.0),
            Target::RightExterior,
        )
        .unwrap();
        assert!(matches!(classify(&p).unwrap(), CaseLabel::Unsupported { .. }));
    }

    #[test]
    fn problem_invariants() {
        let m = LevyMeasure::full(StabilityIndex::new(1.5).unwrap());
        assert!(EscapeProblem::new(DriftSpec::Zero, DiffusionSpec::Zero, 0.0, m, (-1.0, 1.0), Target::RightExterior).is_err());
        assert!(EscapeProblem::new(DriftSpec::Zero, DiffusionSpec::Constant(1.0), 0.0, m, (1.0, -1.0), Target::RightExterior)
            .is_err());
        let t = DriftSpec::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(EscapeProblem::new(t, DiffusionSpec::Constant(1.0), 0.0, m, (-1.0, 1.0), Target::RightExterior).is_err());
        assert_eq!(Target::LeftExterior.exterior_values(), (1.0, 0.0));
    }
}
