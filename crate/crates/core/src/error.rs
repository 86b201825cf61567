use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsoError {
    #[error("invalid lattice spec: {0}")]
    Spec(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported map: {0}")]
    UnsupportedMap(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("integrator did not converge after {iterations} iterations (last update {last_update:e})")]
    Integration { iterations: usize, last_update: f64 },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for IsoError {
    fn from(e: std::io::Error) -> Self {
        IsoError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, IsoError>;
