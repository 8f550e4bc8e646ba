use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a unit (dual) quaternion: invariant off by {deviation:e}")]
    NotUnit { deviation: f64 },

    #[error("degenerate pose: real part norm {norm:e} is too small to normalize")]
    DegeneratePose { norm: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("QP infeasible: best achievable constraint value {best:e}")]
    Infeasible { best: f64, fallback: [f64; 3] },

    #[error("simulation diverged at step {step}")]
    Diverged { step: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
