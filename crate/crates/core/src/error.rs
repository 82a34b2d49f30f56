use crate::C64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// `coth` hit (numerically) one of its poles `w ∈ iπℤ`.
    #[error("singular boundary symbol: coth pole at w = {0}")]
    SingularSymbol(C64),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    /// A cell system could not be factorized; the contour node is probably
    /// sitting on a resonance.
    #[error("singular cell system at contour node {node}")]
    SolverFailure { node: usize },

    #[error("fixpoint iteration is not contracting: e_t = {errors:?}")]
    NonContraction { errors: Vec<f64> },

    #[error("ill-posed mode extraction: {0}")]
    IllPosedExtraction(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),
}
