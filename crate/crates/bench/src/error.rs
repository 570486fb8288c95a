use thiserror::Error;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] sem_core::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource failure: {0}")]
    Resource(String),
    #[error("verification failed: {0} of {1} properties")]
    Verification(usize, usize),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// 0 success, 1 verification failure, 2 configuration error,
    /// 3 resource failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Verification(..) => 1,
            Self::Core(sem_core::Error::Breakdown { .. }) => 1,
            Self::Core(sem_core::Error::NewtonNotConverged { .. }) => 1,
            Self::Core(_) | Self::Config(_) => 2,
            Self::Resource(_) | Self::Io(_) | Self::Csv(_) | Self::Json(_) => 3,
        }
    }
}
