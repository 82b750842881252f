use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("population must contain at least one agent")]
    EmptyPopulation,

    #[error(
        "no exact stubborn realization for n = {n}: stubborn count {value} is not an integer \
         (nearest admissible n: {})",
        nearest_label(.nearest_n)
    )]
    NonIntegerStubbornCount { n: u64, value: f64, nearest_n: Option<u64> },

    #[error("noise with p_noise = {0} has no stubborn realization (requires p_noise < 1)")]
    UnrealizableNoise(f64),

    #[error("exact enumeration is limited to n <= {limit}, got n = {n}")]
    EnumerationTooLarge { n: u64, limit: u64 },

    #[error("balanced initial configuration requires an even population, got n = {0}")]
    OddBalancedInit(u64),

    #[error("epsilon {epsilon} is outside the {regime} range")]
    EpsilonOutOfRange { epsilon: f64, regime: &'static str },

    #[error("unknown dynamics engine '{0}'")]
    UnknownEngine(String),

    #[error("invalid experiment specification: {0}")]
    InvalidSpec(String),

    #[error("config parse error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn nearest_label(n: &Option<u64>) -> String {
    n.map_or_else(|| "none nearby".to_string(), |n| n.to_string())
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
