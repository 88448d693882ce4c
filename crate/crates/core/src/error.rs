use thiserror::Error;

use crate::basis::Level;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid level set: {0}")]
    LevelSet(String),

    #[error("level {0} is not part of the basis")]
    UnknownLevel(Level),

    #[error("cannot parse configuration `{0}`")]
    BadConfiguration(String),

    #[error("site {site} out of range for a {n_sites}-site basis")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("operation requires a tensor-product basis")]
    NotTensorBasis,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("momentum k = {k} is not commensurate with a {n}-site ring")]
    Incommensurate { k: f64, n: usize },

    #[error("eigensolver did not converge within {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("integration unstable at t = {time} us ({what}); reduce the step size")]
    Unstable { time: f64, what: String },

    #[error("state lost positivity at t = {time} us (min eigenvalue {min_eigenvalue:e}); reduce the step size")]
    Positivity { time: f64, min_eigenvalue: f64 },

    #[error("no exceptional point in range [{lo}, {hi}]")]
    NoExceptionalPoint { lo: f64, hi: f64 },

    #[error("no symmetry-breaking threshold in range [{lo}, {hi}]")]
    NoThreshold { lo: f64, hi: f64 },

    #[error("invalid time grid: {0}")]
    TimeGrid(String),

    #[error("fit precondition failed: {0}")]
    FitInput(String),
}
