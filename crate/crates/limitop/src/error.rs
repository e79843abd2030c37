//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A point does not belong to the space it was used with.
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    /// A spec, term, or strategy does not fit the space it was applied to.
    #[error("configuration error: {0}")]
    Config(String),

    /// A well-formed request whose answer is not defined (empty region,
    /// non-finite matrix entries, ball crossing components, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Extraction could not certify a stabilized limit operator. This is a
    /// first-class outcome, never a silent wrong answer.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// The symbol oracle is only defined for eventually periodic band
    /// operators on the one-dimensional lattice.
    #[error("symbol oracle unavailable: {0}")]
    OracleUnavailable(String),

    /// Winding accumulation did not land near an integer.
    #[error("winding grid too coarse: residual {residual}")]
    GridTooCoarse { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
