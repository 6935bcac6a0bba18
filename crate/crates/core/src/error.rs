use thiserror::Error;

/// Errors raised by the homogenization toolkit.
///
/// Numerical payloads are reported as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("quadrature did not converge: unresolved error {unresolved:e} exceeds tolerance {tol:e}")]
    NonConvergedQuadrature { unresolved: f64, tol: f64 },

    #[error("incompatible representations: {0}")]
    IncompatibleRepresentations(String),

    #[error("a gradient rule is required for this operation")]
    MissingGradient,

    #[error("profile is not coercive: {0}")]
    NonCoercive(String),

    #[error("invalid monotone profile: {0}")]
    InvalidProfile(String),

    #[error(
        "level-set condition violated: alpha={alpha}, x={x}, v={v}, measured plateau mass {mass:.6}"
    )]
    Em0Violation {
        alpha: f64,
        x: f64,
        v: f64,
        mass: f64,
    },

    #[error("flux validation failed: {}", .0.join("; "))]
    ValidationFailure(Vec<String>),

    #[error("nonlinear solve failed after {iterations} iterations (last residual {last:e})")]
    NonlinearSolveFailure {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("zero pivot at cell {cell} with sigma = 0; a positive regularization is required")]
    NeedsRegularization { cell: usize },

    #[error("sigma continuation is not contracting: distances {distances:?}, required ratios {required:?}")]
    SigmaCauchyFailure { distances: Vec<f64>, required: Vec<f64> },

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("tridiagonal system is singular at row {0}")]
    SingularSystem(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
