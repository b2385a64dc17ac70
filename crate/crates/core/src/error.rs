use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin s = {0}: integer spin must be at least 1")]
    InvalidSpin(i64),

    #[error("invalid chain length L = {0}: at least 2 sites are required")]
    InvalidLength(usize),

    #[error("boundary indices (p, q) = ({p}, {q}) out of range 1..={max}")]
    BoundaryIndex { p: usize, q: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("dense state needs {needed} amplitudes, cap is {cap}")]
    CapExceeded { needed: u128, cap: usize },

    #[error("index {index} out of range for chain of {len} sites")]
    SiteOutOfRange { index: usize, len: usize },

    #[error("global entanglement undefined: even-sector overlap vanishes")]
    UndefinedGlobalGe,

    #[error("log argument {0} is not positive")]
    Domain(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
