use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("conversion capacity must be at least 1")]
    InvalidCapacity,
    #[error("malformed number: second '.' in output position {slot}")]
    MalformedNumber { slot: usize },
    #[error("capacity of {capacity} output positions exceeded")]
    CapacityExceeded { capacity: usize },
    #[error("malformed postfix: {0}")]
    MalformedPostfix(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot render non-finite value {0}")]
    NonFinite(String),
    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset mixer needs nonempty inputs")]
    EmptyInput,
    #[error("rendered payload {payload:?} does not fit an injection segment of {inject_len}")]
    PayloadTooLong { payload: String, inject_len: usize },
    #[error("gate parameter file: {0}")]
    ParamFormat(String),
}

impl Error {
    /// Stable snake_case name, used in JSON diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidCapacity => "invalid_capacity",
            Error::MalformedNumber { .. } => "malformed_number",
            Error::CapacityExceeded { .. } => "capacity_exceeded",
            Error::MalformedPostfix(_) => "malformed_postfix",
            Error::DivisionByZero => "division_by_zero",
            Error::NonFinite(_) => "non_finite",
            Error::Parse { .. } => "parse_error",
            Error::EmptyCorpus => "empty_corpus",
            Error::InvalidConfig(_) => "invalid_config",
            Error::EmptyInput => "empty_input",
            Error::PayloadTooLong { .. } => "payload_too_long",
            Error::ParamFormat(_) => "param_format",
        }
    }
}
