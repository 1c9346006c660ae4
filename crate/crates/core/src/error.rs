use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown sea-state level {0}")]
    UnknownSeaState(String),

    #[error("sea state {0} has no tabulated wave period")]
    MissingWavePeriod(String),

    #[error("flat sea has no peaks")]
    FlatSea,

    #[error("co-located nodes")]
    CoLocated,

    #[error("distance {distance} m is below reference distance {reference} m")]
    BelowReferenceDistance { distance: f64, reference: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("reflection coefficient {index} is not unit-modulus (|q| = {modulus})")]
    NotUnitModulus { index: usize, modulus: f64 },

    #[error("symbol power {power} of IoT {index} exceeds its budget {budget}")]
    PowerExceeded { index: usize, power: f64, budget: f64 },

    #[error("pilot length {pilot_length} is shorter than the IoT count {iots}")]
    PilotTooShort { pilot_length: usize, iots: usize },

    #[error("{subframes} reflection sub-frames cannot identify {elements} RIS elements")]
    TooFewSubframes { subframes: usize, elements: usize },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("bound defined for single-antenna receiver (M = {0})")]
    MultiAntennaBound(usize),

    #[error("all {0} randomization draws were degenerate")]
    DegenerateRandomization(usize),

    #[error("exhaustive search over {levels}^{elements} phases exceeds the guard")]
    SearchTooLarge { levels: usize, elements: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// Errors that stem from user input (config files, CLI values, paths)
    /// rather than from the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::UnknownSeaState(_)
                | Error::MissingWavePeriod(_)
                | Error::InvalidParameter(_)
                | Error::PilotTooShort { .. }
                | Error::TooFewSubframes { .. }
                | Error::Format { .. }
                | Error::Io { .. }
        )
    }
}
