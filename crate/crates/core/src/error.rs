use thiserror::Error;

/// Errors raised by the operators, the evaluator and the dataset IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid task specification: {0}")]
    InvalidTask(String),

    #[error("invalid chromosome: {0}")]
    InvalidChromosome(String),

    #[error("index {index} outside the allowed range {min}..={max}")]
    OutOfDomain { index: usize, min: usize, max: usize },

    #[error("signal of length {len} is too short for a maximum lag of {max_lag}")]
    SignalTooShort { len: usize, max_lag: usize },

    #[error("empty sample: {0}")]
    EmptySample(&'static str),

    #[error("chromosome at position {0} has no penalty")]
    Unevaluated(usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("fitness evaluation failed: {0}")]
    Fitness(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
