use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e} exceeds {tolerance:e})")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("matrix is singular (|det| = {det:e} below threshold {threshold:e})")]
    SingularMatrix { det: f64, threshold: f64 },

    #[error("quadrature did not converge: relative change {relative_change:e} under refinement exceeds {rtol:e}")]
    QuadratureDiverged { relative_change: f64, rtol: f64 },

    #[error("skipped kernel mass ratio {ratio:e} exceeds {limit:e}")]
    TooMuchSkippedMass { ratio: f64, limit: f64 },

    #[error("spectral identity violated at node {node:?}: relative deviation {deviation:e}")]
    SpectralIdentityViolated { node: Vec<f64>, deviation: f64 },

    #[error("ball B({center:?}, {radius}) does not fit inside the grid box")]
    BallOutsideBox { center: Vec<f64>, radius: f64 },

    #[error("axis {axis} has resolution {resolution}, which is not a power of two")]
    NonPowerOfTwo { axis: usize, resolution: usize },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
