//! Periodic and almost periodic homogenization of degenerate parabolic
//! equations `u_t = Δ f(x, x/ε, u)` on an interval.
//!
//! Everything is generic over the scalar type; the aliases below fix it to `f64`.

pub mod algebra;
pub mod dual;
pub mod error;
pub mod flux;
pub mod harness;
pub mod homogenized;
pub mod linalg;
pub mod profile;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type AlgebraFn = algebra::AlgebraFn<f64>;
pub type MonotoneProfile = profile::MonotoneProfile<f64>;
pub type Flux = flux::Flux<f64>;
pub type HomogenizedFlux = homogenized::HomogenizedFlux<f64>;
pub type Grid1D = solver::Grid1D<f64>;
pub type Field = solver::Field<f64>;
pub type Trajectory = solver::Trajectory<f64>;
pub type DiscretePressure = solver::DiscretePressure<f64>;
pub type DualField = dual::DualField<f64>;
pub type Scenario = harness::Scenario<f64>;
pub type SweepReport = harness::SweepReport<f64>;
