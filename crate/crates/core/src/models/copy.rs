use std::sync::Arc;

use crate::decoder::SequenceModel;
use crate::error::{Error, Result};
use crate::vocab::SubwordVocab;

pub const DEFAULT_MARGIN: f64 = 2.0;

/// A model whose single best output is the source itself.
///
/// The source is segmented greedily; at step `t` the `t`-th source token
/// (or eos once the source is exhausted) sits exactly `margin` nats above
/// every other token, which share the remaining mass uniformly.
#[derive(Debug, Clone)]
pub struct CopyModel {
    vocab: Arc<SubwordVocab>,
    margin: f64,
}

impl CopyModel {
    pub fn new(vocab: Arc<SubwordVocab>, margin: f64) -> Result<Self> {
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "copy margin must be a finite value > 0, got {margin}"
            )));
        }
        Ok(Self { vocab, margin })
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Log-probability of the copy token and of every other token.
    pub fn levels(&self) -> (f64, f64) {
        let others = (self.vocab.len() - 1) as f64;
        let top = -(others * (-self.margin).exp()).ln_1p();
        (top, top - self.margin)
    }

    /// The token the model prefers after `prefix_len` tokens.
    pub fn target(&self, source: &str, prefix_len: usize) -> u32 {
        self.vocab
            .segment(source)
            .get(prefix_len)
            .copied()
            .unwrap_or(self.vocab.eos_id())
    }
}

impl SequenceModel for CopyModel {
    fn score_step(&self, source: &str, prefix: &[u32]) -> Result<Vec<f64>> {
        let (top, rest) = self.levels();
        let mut out = vec![rest; self.vocab.len()];
        out[self.target(source, prefix.len()) as usize] = top;
        Ok(out)
    }
}
