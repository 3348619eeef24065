use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("vocabulary file is empty")]
    EmptyVocab,

    #[error("duplicate token {token:?} on line {line} (first seen on line {first})")]
    DuplicateToken {
        token: String,
        line: usize,
        first: usize,
    },

    #[error("vocabulary is missing reserved token {0}")]
    MissingReserved(&'static str),

    #[error("token id {0} is out of range")]
    InvalidTokenId(u32),

    #[error("end-of-sentence token at position {0} is not the last token")]
    MisplacedEos(usize),

    #[error("input contains no words")]
    EmptyInput,

    #[error("invalid decode configuration: {0}")]
    InvalidConfig(String),

    #[error("expected a score vector of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("cannot extend a finished hypothesis")]
    HypothesisFinished,

    #[error("corpus {0} contains no sentences")]
    EmptyCorpus(String),

    #[error("invalid model spec {spec:?}: {reason}")]
    ModelSpec { spec: String, reason: String },

    #[error("no statistics to score")]
    NoStats,

    #[error(
        "target BLEU {target:.4} is not bracketed: alpha {alpha_lo} gives {bleu_lo:.4}, \
         alpha {alpha_hi} gives {bleu_hi:.4} (tolerance {tolerance})"
    )]
    NotBracketed {
        target: f64,
        tolerance: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        bleu_lo: f64,
        bleu_hi: f64,
    },

    #[error("invalid calibration spec: {0}")]
    InvalidCalibration(String),
}
