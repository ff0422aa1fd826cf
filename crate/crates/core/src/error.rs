use thiserror::Error;

/// Every failure the simulator reports. Validation problems name the offending field.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("phase sequence too short: need {needed} symbols, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error("AMZI delay {delay_s:e} s does not match pulse period {period_s:e} s")]
    DelayMismatch { delay_s: f64, period_s: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("need more than {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("byte stream has zero variance; autocorrelation is undefined")]
    ZeroVariance,

    #[error("histogram is degenerate: {0}")]
    DegenerateHistogram(&'static str),

    #[error("requested {requested} bits but the entropy budget allows {available}")]
    EntropyBudgetExceeded { requested: usize, available: usize },

    #[error("session expects protocol {expected}, config is {got}")]
    WrongProtocol { expected: &'static str, got: &'static str },

    #[error("error rate {0} is at or above 1/2; no key can be distilled")]
    QberTooHigh(f64),

    #[error("unknown detector preset `{name}` (known presets: {known})")]
    UnknownPreset { name: String, known: String },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("reference `{label}` at {loss_db} dB lies outside the swept range [{min_db}, {max_db}] dB")]
    ReferenceOutOfRange {
        label: String,
        loss_db: f64,
        min_db: f64,
        max_db: f64,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
