//! Deterministic stand-ins for a neural paraphraser.
//!
//! Spec strings select a model on the command line:
//! `copy`, `copy:g=2.0`, `ngram:order=3,delta=0.1,corpus=PATH`.

mod copy;
mod ngram;

pub use copy::{CopyModel, DEFAULT_MARGIN};
pub use ngram::NgramLM;

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use crate::decoder::SequenceModel;
use crate::error::{Error, Result};
use crate::vocab::SubwordVocab;

pub type SharedModel = Box<dyn SequenceModel + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Copy {
        margin: f64,
    },
    Ngram {
        order: usize,
        delta: f64,
        corpus: PathBuf,
    },
}

impl ModelSpec {
    pub fn build(&self, vocab: Arc<SubwordVocab>) -> Result<SharedModel> {
        Ok(match self {
            ModelSpec::Copy { margin } => Box::new(CopyModel::new(vocab, *margin)?),
            ModelSpec::Ngram {
                order,
                delta,
                corpus,
            } => Box::new(NgramLM::train(corpus, *order, *delta, vocab)?),
        })
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |reason: String| Error::ModelSpec {
            spec: spec.to_string(),
            reason,
        };
        let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
        let mut pairs = Vec::new();
        for item in params.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| fail(format!("expected key=value, got {item:?}")))?;
            pairs.push((k.trim(), v.trim()));
        }
        let number = |key: &str, raw: &str| -> Result<f64> {
            raw.parse::<f64>()
                .map_err(|_| fail(format!("{key} must be a number, got {raw:?}")))
        };

        match kind.trim() {
            "copy" => {
                let mut margin = DEFAULT_MARGIN;
                for (k, v) in pairs {
                    match k {
                        "g" | "margin" => margin = number(k, v)?,
                        _ => return Err(fail(format!("unknown copy parameter {k:?}"))),
                    }
                }
                if !(margin > 0.0 && margin.is_finite()) {
                    return Err(fail("g must be > 0".into()));
                }
                Ok(ModelSpec::Copy { margin })
            }
            "ngram" => {
                let mut order = 3;
                let mut delta = 0.1;
                let mut corpus = None;
                for (k, v) in pairs {
                    match k {
                        "order" => {
                            order = v
                                .parse()
                                .map_err(|_| fail(format!("order must be an integer, got {v:?}")))?
                        }
                        "delta" => delta = number(k, v)?,
                        "corpus" => corpus = Some(PathBuf::from(v)),
                        _ => return Err(fail(format!("unknown ngram parameter {k:?}"))),
                    }
                }
                if order < 1 {
                    return Err(fail("order must be >= 1".into()));
                }
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(fail("delta must be > 0".into()));
                }
                let corpus = corpus.ok_or_else(|| fail("corpus=PATH is required".into()))?;
                Ok(ModelSpec::Ngram {
                    order,
                    delta,
                    corpus,
                })
            }
            other => Err(fail(format!(
                "unknown model {other:?} (expected copy or ngram)"
            ))),
        }
    }
}
