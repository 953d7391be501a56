//! Small-noise expansions of the escape probability.

pub mod case4;
pub mod regular;
pub mod singular;
pub mod stationary;

pub use case4::{case4_constant, Case4Constant, Case4Formula, Case4Options};
pub use regular::{brownian_p1_closed_form, regular_expansion, regular_g, regular_p0, regular_p1, RegularExpansion, RegularOptions};
pub use singular::{gamma_residual, gamma_root, layer_residual, singular_expansion, Composition, SingularExpansion, SingularOptions};
pub use stationary::{stationary_density, StationaryDensity};
