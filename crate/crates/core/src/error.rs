use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid bundle model: {0}")]
    Model(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("metric is not positive definite at grid point {0}")]
    NotPositive(usize),
    #[error("not a projection: {0}")]
    NotProjection(String),
    #[error("not equilibrated: spatial spread {spread:.3e} >= cluster tolerance {tol:.3e}")]
    NotEquilibrated { spread: f64, tol: f64 },
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
