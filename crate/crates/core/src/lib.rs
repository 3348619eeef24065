//! Paraphrase decoding with soft n-gram overlap penalties.
//!
//! A sequence model proposes next-token log-probabilities; the decoder
//! subtracts `alpha * n^beta` from every word-initial subword that would
//! start the last word of an n-gram already present in the input, so beam
//! search is pushed away from copying while the model keeps it fluent.
//! `alpha` is the diversity knob and can be calibrated against input/output
//! BLEU.

pub mod bleu;
pub mod calibrate;
pub mod cli;
pub mod decoder;
pub mod error;
pub mod models;
pub mod penalty;
pub mod vocab;

pub use bleu::{bleu_stats, corpus_bleu, overlap_profile, sentence_bleu, BleuStats};
pub use calibrate::{calibrate_alpha, diversity_at, Calibration, CalibrationSpec};
pub use decoder::{decode, DecodeResult, Hypothesis, SequenceModel};
pub use error::{Error, Result};
pub use models::{CopyModel, ModelSpec, NgramLM};
pub use penalty::{build_penalties, extract_ngrams, DecodeConfig, PenaltyTable};
pub use vocab::{Subword, SubwordVocab};
