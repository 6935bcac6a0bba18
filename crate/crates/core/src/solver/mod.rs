//! Implicit finite-difference solver for `u_t = Δ f(x, x/ε, u)` on an
//! interval with zero pressure at both ends.

pub mod diagnostics;
pub mod grid;
pub mod law;
pub mod scheme;

pub use diagnostics::{
    bump, comparison_check, conservation_defect, constant_field, contraction_record, kruzhkov_residual,
    l1_distance, monotone_probe, time_modulus, translation_modulus, weighted_l1_distance, ContractionRecord,
    EntropyResidual, TensorBump,
};
pub use grid::{apply_laplacian, laplacian_dirichlet, Field, Grid1D, Role};
pub use law::{DiscretePressure, Sampling};
pub use scheme::{
    evolve, solve, stationary_profile, step_implicit, CauchyRecord, SigmaRule, StepOptions, StepReport, Trajectory,
};
