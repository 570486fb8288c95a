use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported number of GLL points {0}, expected 2..=16")]
    UnsupportedPoints(usize),
    #[error("Newton iteration for GLL node {index} did not converge")]
    NewtonNotConverged { index: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("scratch variant needs {required} words for n = {n}, capacity is {capacity}")]
    ScratchCapacity { n: usize, required: usize, capacity: usize },
    #[error("CG breakdown at iteration {iteration}: <p, Ap> = {curvature:e}")]
    Breakdown { iteration: usize, curvature: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
