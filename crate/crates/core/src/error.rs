use std::path::Path;

use thiserror::Error;

use crate::stl::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("signal too short: evaluating at t={t} with horizon {horizon} needs samples {t}..={last}, but the signal has {len}")]
    SignalTooShort {
        t: usize,
        horizon: usize,
        last: usize,
        len: usize,
    },

    #[error("unknown channel '{0}'")]
    UnknownChannel(String),

    #[error("invalid signal: {0}")]
    Signal(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("could not place {what} after {attempts} attempts; the arena is too crowded")]
    Placement { what: &'static str, attempts: usize },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("exhaustive search over {sequences} sequences exceeds the budget of {budget}")]
    Budget { sequences: f64, budget: usize },

    #[error("planner: {0}")]
    Planner(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Error::Io(format!("{}: {err}", path.display()))
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
