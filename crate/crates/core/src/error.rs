use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series has {0} point(s); at least 2 are required")]
    EmptySeries(usize),
    #[error("series mean is zero; cannot rescale")]
    ZeroMeanSeries,
    #[error("series maximum is zero; cannot normalize to 0-100")]
    ZeroMaxSeries,
    #[error("series is already weekly")]
    AlreadyWeekly,
    #[error("series resolution must be {expected}, got {found}")]
    WrongResolution { expected: &'static str, found: &'static str },
    #[error("supply and demand resolutions differ ({supply} vs {demand})")]
    ResolutionMismatch { supply: &'static str, demand: &'static str },
    #[error("supply/demand resolution pair {supply}/{demand} is not supported")]
    ResolutionPairUnsupported { supply: &'static str, demand: &'static str },
    #[error("supply and demand share fewer than 2 timestamps ({0})")]
    NoOverlap(usize),
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("loess window of {window} points is too small for degree {degree}")]
    WindowTooSmall { window: usize, degree: usize },
    #[error("loess fit has no positive weights at position {0}")]
    DegenerateFit(f64),
    #[error("series of length {len} is too short (need at least {min})")]
    SeriesTooShort { len: usize, min: usize },
    #[error("invalid seasonal period {0}")]
    InvalidPeriod(usize),

    #[error("quantile of an empty sample")]
    EmptySample,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("timestamps of the inputs do not line up")]
    TimestampMismatch,
    #[error("anomalous point at {0} has zero delta; sign the anomalies first")]
    UnsignedAnomaly(NaiveDate),

    #[error("injection count {count} exceeds series length {len}")]
    CountExceedsLength { count: usize, len: usize },

    #[error("sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("sequence has zero variance")]
    ZeroVariance,
    #[error("credibility score {0} outside [0, 100]")]
    ScoreOutOfRange(f64),
    #[error("no post matched a rated domain")]
    EmptyJoin,

    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: duplicate date {date} for series {series}")]
    DuplicateTimestamp { line: u64, series: String, date: NaiveDate },
    #[error("line {line}: negative value {value}")]
    NegativeValue { line: u64, value: f64 },
    #[error("line {line}: unknown role {role:?}")]
    UnknownRole { line: u64, role: String },
    #[error("unknown series id {0:?}")]
    UnknownSeries(String),

    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON failure: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the underlying reader or writer as opposed to
    /// invalid data or configuration.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => e.is_io_error(),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
