use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {what}: {detail}")]
    NonFinite { what: &'static str, detail: String },

    #[error("replay memory: batch iteration {got} pushed after {last}, expected {expected}")]
    OutOfOrderBatch { last: u64, expected: u64, got: u64 },

    #[error("mini-batch of {requested} samples requested from an active pool of {available}")]
    PoolTooSmall { requested: usize, available: usize },

    #[error("degenerate score range: min {min} is not below max {max}")]
    DegenerateRange { min: f64, max: f64 },

    #[error("environment stepped before reset")]
    EnvNotReset,

    #[error("unknown environment id {0:?} (expected pendulum, pointmass or synth-K)")]
    UnknownEnv(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("metrics record: {0}")]
    Record(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
