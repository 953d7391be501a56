//! Path simulation of dX = b(X)dt + σ(X)dB + ε dL and first-exit classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{EscapeProblem, Target};
use crate::stable::{sample_stable_increment, LevyMeasure, StabilityIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCConfig {
    pub n_paths: usize,
    pub dt: f64,
    /// Horizon; [`default_horizon`] when unset.
    pub t_max: Option<f64>,
    pub seed: u64,
    /// Pair path 2k+1 with path 2k by flipping the sign of every noise increment.
    pub antithetic: bool,
    /// Check for diffusive crossings inside a step with the Brownian-bridge exit probability.
    pub brownian_bridge: bool,
    /// Jumps of the truncated measure below this size are replaced by a Gaussian.
    pub small_jump_cutoff: f64,
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig {
            n_paths: 10_000,
            dt: 1e-3,
            t_max: None,
            seed: 0,
            antithetic: false,
            brownian_bridge: true,
            small_jump_cutoff: 1e-3,
        }
    }
}

impl MCConfig {
    pub fn validate(&self, problem: &EscapeProblem) -> Result<()> {
        let (a, b) = problem.domain();
        if self.n_paths < 1 {
            return Err(Error::domain("at least one path is needed"));
        }
        if !(self.dt > 0.0 && self.dt < b - a) {
            return Err(Error::domain(format!("time step must lie in (0, {}), got {}", b - a, self.dt)));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::domain(format!("horizon must be positive, got {t}")));
            }
        }
        if !(self.small_jump_cutoff > 0.0 && self.small_jump_cutoff < 1.0) {
            return Err(Error::domain("small-jump cutoff must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    TargetHit,
    OtherHit,
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub kind: ExitKind,
    /// Landing point (may lie beyond the boundary), or the position at the horizon.
    pub position: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateWithCI {
    pub x0: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub n_target: usize,
    pub n_other: usize,
    pub n_censored: usize,
    pub n_paths: usize,
}

impl EstimateWithCI {
    pub fn censored_fraction(&self) -> f64 {
        self.n_censored as f64 / self.n_paths as f64
    }
}

/// 50 transit times (B − A)/max(|b|, σ, ε), with max |b| and σ over a scan of [A, B].
pub fn default_horizon(problem: &EscapeProblem) -> f64 {
    let (a, b) = problem.domain();
    let mut speed = problem.epsilon();
    for k in 0..=256 {
        let x = a + (b - a) * k as f64 / 256.0;
        speed = speed.max(problem.b(x).abs()).max(problem.sigma(x).abs());
    }
    50.0 * (b - a) / speed
}

/// Jump part of one step, before multiplication by ε.
enum JumpSampler {
    None,
    Stable(StabilityIndex),
    Truncated {
        poisson: Option<Poisson<f64>>,
        small_sd: f64,
        lo_pow: f64,
        alpha: f64,
    },
}

impl JumpSampler {
    fn new(problem: &EscapeProblem, cfg: &MCConfig) -> Result<Self> {
        if problem.epsilon() == 0.0 {
            return Ok(JumpSampler::None);
        }
        Ok(match *problem.measure() {
            LevyMeasure::FullPowerLaw { alpha } => JumpSampler::Stable(alpha),
            LevyMeasure::TruncatedPowerLaw { alpha, kappa } => {
                let a = alpha.value();
                let d = cfg.small_jump_cutoff;
                let rate = 2.0 * kappa * (d.powf(-a) - 1.0) / a * cfg.dt;
                let poisson = if rate > 0.0 {
                    Some(Poisson::new(rate).map_err(|e| Error::domain(format!("jump intensity: {e}")))?)
                } else {
                    None
                };
                let small_var = 2.0 * kappa * d.powf(2.0 - a) / (2.0 - a) * cfg.dt;
                JumpSampler::Truncated { poisson, small_sd: small_var.sqrt(), lo_pow: d.powf(-a), alpha: a }
            }
        })
    }

    fn sample<R: Rng>(&self, dt: f64, rng: &mut R) -> f64 {
        match self {
            JumpSampler::None => 0.0,
            JumpSampler::Stable(alpha) => sample_stable_increment(*alpha, dt, rng),
            JumpSampler::Truncated { poisson, small_sd, lo_pow, alpha } => {
                let z: f64 = rng.sample(StandardNormal);
                let mut total = small_sd * z;
                if let Some(p) = poisson {
                    let n = p.sample(rng) as usize;
                    for _ in 0..n {
                        // inverse CDF of u^{−1−α} on (δ, 1]
                        let v: f64 = rng.gen();
                        let size = (lo_pow - v * (lo_pow - 1.0)).powf(-1.0 / alpha);
                        total += if rng.gen::<bool>() { size } else { -size };
                    }
                }
                total
            }
        }
    }
}

fn path_rng(seed: u64, path: usize, antithetic: bool) -> (ChaCha8Rng, f64) {
    let (stream, sign) = if antithetic { ((path / 2) as u64, if path % 2 == 1 { -1.0 } else { 1.0 }) } else { (path as u64, 1.0) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (rng, sign)
}

struct Stepper<'a> {
    problem: &'a EscapeProblem,
    cfg: &'a MCConfig,
    jumps: JumpSampler,
    t_max: f64,
}

impl<'a> Stepper<'a> {
    fn new(problem: &'a EscapeProblem, cfg: &'a MCConfig) -> Result<Self> {
        cfg.validate(problem)?;
        let jumps = JumpSampler::new(problem, cfg)?;
        let t_max = cfg.t_max.unwrap_or_else(|| default_horizon(problem));
        Ok(Stepper { problem, cfg, jumps, t_max })
    }

    fn classify(&self, position: f64, time: f64) -> PathOutcome {
        let (a, _) = self.problem.domain();
        let right = position > a;
        let kind = match (self.problem.target(), right) {
            (Target::RightExterior, true) | (Target::LeftExterior, false) => ExitKind::TargetHit,
            _ => ExitKind::OtherHit,
        };
        PathOutcome { kind, position, time }
    }

    fn run<R: Rng>(&self, x0: f64, rng: &mut R, sign: f64, mut trace: Option<&mut Vec<(f64, f64)>>) -> PathOutcome {
        let (a, b) = self.problem.domain();
        let dt = self.cfg.dt;
        let sq = dt.sqrt();
        let eps = self.problem.epsilon();
        let mut x = x0;
        let mut t = 0.0;
        let steps = (self.t_max / dt).ceil() as u64;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push((t, x));
        }
        for _ in 0..steps {
            let sigma = self.problem.sigma(x);
            let z: f64 = rng.sample(StandardNormal);
            let cont = x + self.problem.b(x) * dt + sigma * sq * sign * z;
            t += dt;
            if self.cfg.brownian_bridge && sigma != 0.0 && cont > a && cont < b {
                let var = sigma * sigma * dt;
                let p_left = (-2.0 * (x - a) * (cont - a) / var).exp();
                let p_right = (-2.0 * (b - x) * (b - cont) / var).exp();
                let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
                if u1 < p_left {
                    return self.classify(a, t);
                }
                if u2 < p_right {
                    return self.classify(b, t);
                }
            }
            let next = cont + eps * sign * self.jumps.sample(dt, rng);
            x = next;
            if let Some(tr) = trace.as_deref_mut() {
                tr.push((t, x));
            }
            if !(x > a && x < b) {
                return self.classify(x, t);
            }
        }
        PathOutcome { kind: ExitKind::Censored, position: x, time: t }
    }
}

/// Simulate one path from `x0` with a caller-supplied generator; `sign` = −1 gives the antithetic path.
pub fn simulate_exit<R: Rng>(problem: &EscapeProblem, x0: f64, cfg: &MCConfig, rng: &mut R, sign: f64) -> Result<PathOutcome> {
    check_start(problem, x0)?;
    Ok(Stepper::new(problem, cfg)?.run(x0, rng, sign, None))
}

/// Path number `path` of the ensemble defined by `cfg.seed`.
pub fn simulate_path(problem: &EscapeProblem, x0: f64, cfg: &MCConfig, path: usize) -> Result<PathOutcome> {
    check_start(problem, x0)?;
    let (mut rng, sign) = path_rng(cfg.seed, path, cfg.antithetic);
    Ok(Stepper::new(problem, cfg)?.run(x0, &mut rng, sign, None))
}

/// (t, X_t) samples of path number `path`, up to and including the exit step.
pub fn trace_path(problem: &EscapeProblem, x0: f64, cfg: &MCConfig, path: usize) -> Result<(PathOutcome, Vec<(f64, f64)>)> {
    check_start(problem, x0)?;
    let (mut rng, sign) = path_rng(cfg.seed, path, cfg.antithetic);
    let mut tr = Vec::new();
    let out = Stepper::new(problem, cfg)?.run(x0, &mut rng, sign, Some(&mut tr));
    Ok((out, tr))
}

fn check_start(problem: &EscapeProblem, x0: f64) -> Result<()> {
    let (a, b) = problem.domain();
    if !(x0 > a && x0 < b) {
        return Err(Error::domain(format!("starting point {x0} is outside ({a}, {b})")));
    }
    Ok(())
}

pub fn estimate_escape(problem: &EscapeProblem, x0: f64, cfg: &MCConfig) -> Result<EstimateWithCI> {
    check_start(problem, x0)?;
    let stepper = Stepper::new(problem, cfg)?;
    let (n_target, n_other, n_censored) = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let (mut rng, sign) = path_rng(cfg.seed, i, cfg.antithetic);
            match stepper.run(x0, &mut rng, sign, None).kind {
                ExitKind::TargetHit => (1usize, 0usize, 0usize),
                ExitKind::OtherHit => (0, 1, 0),
                ExitKind::Censored => (0, 0, 1),
            }
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    let done = n_target + n_other;
    if done == 0 {
        return Err(Error::EstimateUnavailable(format!("all {} paths were censored at the horizon", cfg.n_paths)));
    }
    let p_hat = n_target as f64 / done as f64;
    Ok(EstimateWithCI {
        x0,
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / done as f64).sqrt(),
        n_target,
        n_other,
        n_censored,
        n_paths: cfg.n_paths,
    })
}
