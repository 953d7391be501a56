//! Escape probabilities of scalar SDEs driven by Brownian motion and small
//! symmetric α-stable Lévy noise.
//!
//! Three pipelines cross-check each other:
//!
//! * [`solver`]: the nonlocal exterior-value problem on a uniform grid,
//! * [`asymptotics`]: regular (ε^α power series) and boundary-layer expansions,
//! * [`montecarlo`]: path simulation with jump overshoot.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod interp;
pub mod layer;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod quad;
pub mod solver;
pub mod stable;

pub use error::{Error, Result};
pub use grid::GridFunction;
pub use model::{CaseLabel, DiffusionSpec, DriftSpec, EscapeProblem, Target};
pub use stable::{LevyMeasure, QuadratureConfig, StabilityIndex};
