use thiserror::Error;

/// Everything that can go wrong between raw inputs and a finished report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("weights: {0}")]
    Weights(String),
    #[error("config: {0}")]
    Config(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("sign: {0}")]
    Sign(String),
    #[error("branch: {0}")]
    Branch(String),
    #[error("hypothesis: {0}")]
    Hypothesis(String),
    #[error("classification: general root {general} fails the sandwich, {variant} root {recomputed:?} fails its own condition")]
    Classification {
        general: f64,
        variant: &'static str,
        recomputed: Option<f64>,
    },
}

impl Error {
    /// Process exit code used by the CLI: 2 for bad input, 3 for numerical trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Weights(_) | Error::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
