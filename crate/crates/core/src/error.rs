use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize, what: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("vector is isotropic: {0}")]
    Isotropic(String),

    #[error("not negative definite: {0}")]
    NotNegativeDefinite(String),

    #[error("collection is not certified in good position ({0})")]
    Uncertified(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
