//! Error type shared by every module of the crate.

use thiserror::Error;

/// Result alias for fallible operations in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building or running a simulation.
///
/// The variants split into three families that callers may want to treat
/// differently: invalid parameters (`Domain`), physics preconditions that
/// failed at runtime (`Coverage`, `HeraldMiss`, `UndefinedReadout`) and I/O
/// or file-format problems (`Io`, `Format`).
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its allowed range, or two inputs are
    /// geometrically incompatible.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested grid captures too little of the analytic biphoton
    /// probability to represent the state faithfully.
    #[error("grid too small for the biphoton state: captured fraction {captured:.6} < {required:.3}")]
    Coverage {
        /// Fraction of the analytic probability inside the grid.
        captured: f64,
        /// Minimum captured fraction that would have been accepted.
        required: f64,
    },

    /// The heralding detector sits where the idler beam carries essentially
    /// no probability, so there is no conditional state to prepare.
    #[error("herald miss: conditional probability {probability:.3e} below threshold")]
    HeraldMiss {
        /// Probability mass found at the detector sample.
        probability: f64,
    },

    /// A ratio of counts or rates was requested with a zero denominator.
    #[error("undefined readout: total counts/rates are zero")]
    UndefinedReadout,

    /// Underlying I/O failure while reading or writing a container file.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A container file exists but does not parse as the expected format.
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
