use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: file is empty")]
    EmptyFile { path: PathBuf },

    #[error("length mismatch: {left} has {left_len} rows, {right} has {right_len}")]
    LengthMismatch {
        left: String,
        left_len: usize,
        right: String,
        right_len: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("search space too large: {what} ({size} > limit {limit})")]
    GuardExceeded {
        what: &'static str,
        size: f64,
        limit: f64,
    },

    #[error("non-finite value during training: {0}")]
    NonFinite(String),

    #[error("reward ledger mismatch in episode {episode}: sum of rewards {rewards} vs 1000 x cost {scaled_cost}")]
    Ledger {
        episode: usize,
        rewards: f64,
        scaled_cost: f64,
    },

    #[error("agent file: {0}")]
    AgentFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
