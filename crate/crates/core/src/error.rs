use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank {value} at index {index} is outside 1..={max}")]
    RankOutOfRange { index: usize, value: i64, max: u64 },

    #[error("no samples")]
    NoSamples,

    #[error("value {value} at index {index} is outside [0, 1)")]
    ValueOutOfRange { index: usize, value: f64 },

    #[error("negative height {value} in bin {index}")]
    NegativeHeight { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("histogram generation failed: {0}")]
    Generation(String),

    #[error("no labels")]
    NoLabels,

    #[error("unknown histogram id {0}")]
    UnknownHistogram(u32),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("empty curve")]
    EmptyCurve,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable identifier of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::RankOutOfRange { .. } => "rank_out_of_range",
            Error::NoSamples => "no_samples",
            Error::ValueOutOfRange { .. } => "value_out_of_range",
            Error::NegativeHeight { .. } => "negative_height",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Generation(_) => "generation",
            Error::NoLabels => "no_labels",
            Error::UnknownHistogram(_) => "unknown_histogram",
            Error::UndefinedCorrelation(_) => "undefined_correlation",
            Error::EmptyCurve => "empty_curve",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
