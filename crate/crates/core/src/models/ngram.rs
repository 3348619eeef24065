use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::decoder::SequenceModel;
use crate::error::{Error, Result};
use crate::vocab::SubwordVocab;

/// Padding symbol for contexts that reach before the sentence start.
const BOS: u32 = u32::MAX;

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: u64,
    next: HashMap<u32, u64>,
}

/// Token-level n-gram language model with add-delta smoothing.
///
/// NOTE: it ignores the source sentence completely. It only models fluency,
/// which is enough to watch penalties push output around, but it is not a
/// paraphraser.
#[derive(Debug, Clone)]
pub struct NgramLM {
    vocab: Arc<SubwordVocab>,
    order: usize,
    delta: f64,
    counts: HashMap<Vec<u32>, ContextCounts>,
}

impl NgramLM {
    /// Trains on greedy segmentations of `sentences`; blank lines are
    /// skipped. Each sentence is terminated with eos.
    pub fn from_sentences<I, S>(
        sentences: I,
        order: usize,
        delta: f64,
        vocab: Arc<SubwordVocab>,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if order < 1 {
            return Err(Error::InvalidConfig(
                "n-gram order must be at least 1".into(),
            ));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "smoothing delta must be a finite value > 0, got {delta}"
            )));
        }
        let ctx_len = order - 1;
        let mut counts: HashMap<Vec<u32>, ContextCounts> = HashMap::new();
        let mut seen = 0usize;
        for sentence in sentences {
            let sentence = sentence.as_ref();
            if sentence.trim().is_empty() {
                continue;
            }
            seen += 1;
            let mut padded = vec![BOS; ctx_len];
            padded.extend(vocab.segment(sentence));
            padded.push(vocab.eos_id());
            for window in padded.windows(order) {
                let (&next, ctx) = window.split_last().expect("order >= 1");
                let entry = counts.entry(ctx.to_vec()).or_default();
                entry.total += 1;
                *entry.next.entry(next).or_default() += 1;
            }
        }
        if seen == 0 {
            return Err(Error::EmptyCorpus("<in-memory>".into()));
        }
        Ok(Self {
            vocab,
            order,
            delta,
            counts,
        })
    }

    /// Trains on a UTF-8 corpus file with one sentence per line.
    pub fn train(
        corpus: impl AsRef<Path>,
        order: usize,
        delta: f64,
        vocab: Arc<SubwordVocab>,
    ) -> Result<Self> {
        let path = corpus.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_sentences(text.lines(), order, delta, vocab).map_err(|e| match e {
            Error::EmptyCorpus(_) => Error::EmptyCorpus(path.display().to_string()),
            other => other,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn context(&self, prefix: &[u32]) -> Vec<u32> {
        let ctx_len = self.order - 1;
        let mut ctx = Vec::with_capacity(ctx_len);
        let missing = ctx_len.saturating_sub(prefix.len());
        ctx.resize(missing, BOS);
        ctx.extend_from_slice(&prefix[prefix.len() - (ctx_len - missing)..]);
        ctx
    }

    /// Smoothed probability of `next` after `prefix`.
    pub fn prob(&self, prefix: &[u32], next: u32) -> f64 {
        let v = self.vocab.len() as f64;
        match self.counts.get(&self.context(prefix)) {
            None => 1.0 / v,
            Some(c) => {
                let hits = c.next.get(&next).copied().unwrap_or(0) as f64;
                (hits + self.delta) / (c.total as f64 + self.delta * v)
            }
        }
    }
}

impl SequenceModel for NgramLM {
    fn score_step(&self, _source: &str, prefix: &[u32]) -> Result<Vec<f64>> {
        let v = self.vocab.len();
        let Some(c) = self.counts.get(&self.context(prefix)) else {
            return Ok(vec![-(v as f64).ln(); v]);
        };
        let denom = (c.total as f64 + self.delta * v as f64).ln();
        let mut out = vec![self.delta.ln() - denom; v];
        for (&id, &hits) in &c.next {
            out[id as usize] = (hits as f64 + self.delta).ln() - denom;
        }
        Ok(out)
    }
}
