//! Soft n-gram overlap penalties.
//!
//! Before decoding a sentence, [`build_penalties`] collects every word
//! n-gram of the input (n = 1..=max_order) and maps its first n-1 words (the
//! context) to the word-initial subwords that could begin its last word, each
//! carrying `alpha * n^beta`. At every decoder step [`PenaltyTable::penalize`]
//! looks up all suffixes of the hypothesis' recent words and subtracts the
//! largest matching penalty from the model's log-probabilities.

pub mod oracle;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::vocab::{casefold, SubwordVocab};

/// Operating points used for diversity sweeps: light, medium, heavy.
pub const ALPHA_PRESETS: [f64; 3] = [0.0005, 0.003, 0.006];

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeConfig {
    /// Penalty weight. Zero disables penalties.
    pub alpha: f64,
    /// Exponent on the n-gram order.
    pub beta: f64,
    /// Longest input n-gram considered.
    pub max_order: usize,
    pub beam_size: usize,
    /// Cap on generated tokens, eos included.
    pub max_len: usize,
    /// Rank finished hypotheses by score / length instead of raw score.
    pub length_normalize: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            alpha: 0.003,
            beta: 4.0,
            max_order: 4,
            beam_size: 5,
            max_len: 200,
            length_normalize: true,
        }
    }
}

impl DecodeConfig {
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!(
                "alpha must be a finite value >= 0, got {}",
                self.alpha
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!(
                "beta must be a finite value > 0, got {}",
                self.beta
            ));
        }
        if self.max_order < 1 {
            return bad("max_order must be at least 1".into());
        }
        if self.beam_size < 1 {
            return bad("beam_size must be at least 1".into());
        }
        if self.max_len < 1 {
            return bad("max_len must be at least 1".into());
        }
        Ok(())
    }

    /// `alpha * order^beta`.
    pub fn penalty_for_order(&self, order: usize) -> f64 {
        let n = order as f64;
        let scale = if self.beta.fract() == 0.0 && self.beta <= i32::MAX as f64 {
            n.powi(self.beta as i32)
        } else {
            n.powf(self.beta)
        };
        self.alpha * scale
    }
}

/// Case-folded word n-gram.
pub type Ngram = Vec<String>;

/// Whitespace-split, case-folded words of `input`.
pub fn folded_words(input: &str) -> Vec<String> {
    input.split_whitespace().map(casefold).collect()
}

/// All distinct word n-grams of `input` with 1 <= n <= max_order.
pub fn extract_ngrams(input: &str, max_order: usize) -> Result<BTreeSet<Ngram>> {
    let words = folded_words(input);
    if words.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = BTreeSet::new();
    for n in 1..=max_order.min(words.len()) {
        for window in words.windows(n) {
            out.insert(window.to_vec());
        }
    }
    Ok(out)
}

/// Context words (first n-1 words of an input n-gram) to per-subword
/// penalties. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTable {
    entries: HashMap<Vec<String>, Vec<(u32, f64)>>,
    max_order: usize,
    vocab_size: usize,
}

pub fn build_penalties(
    input: &str,
    vocab: &SubwordVocab,
    config: &DecodeConfig,
) -> Result<PenaltyTable> {
    config.validate()?;
    let ngrams = extract_ngrams(input, config.max_order)?;
    let mut staged: HashMap<Vec<String>, HashMap<u32, f64>> = HashMap::new();
    if config.alpha > 0.0 {
        for gram in &ngrams {
            let (last, context) = gram.split_last().expect("n-grams are nonempty");
            let ids = vocab.subwords_beginning(last);
            if ids.is_empty() {
                continue;
            }
            let penalty = config.penalty_for_order(gram.len());
            let slot = staged.entry(context.to_vec()).or_default();
            for id in ids {
                let p = slot.entry(id).or_insert(penalty);
                if penalty > *p {
                    *p = penalty;
                }
            }
        }
    }
    let entries = staged
        .into_iter()
        .map(|(ctx, map)| {
            let mut row: Vec<(u32, f64)> = map.into_iter().collect();
            row.sort_unstable_by_key(|&(id, _)| id);
            (ctx, row)
        })
        .collect();
    Ok(PenaltyTable {
        entries,
        max_order: config.max_order,
        vocab_size: vocab.len(),
    })
}

impl PenaltyTable {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct contexts.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Penalties stored under one context, sorted by subword id.
    pub fn lookup(&self, context: &[String]) -> Option<&[(u32, f64)]> {
        self.entries.get(context).map(Vec::as_slice)
    }

    /// Iterates over `(context, penalties)` in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = (&[String], &[(u32, f64)])> {
        self.entries
            .iter()
            .map(|(k, v)| (k.as_slice(), v.as_slice()))
    }

    /// Maximum penalty per subword over every suffix of `recent_words`
    /// (length 0 to max_order-1), sorted by id. Only the trailing
    /// max_order-1 words matter; anything older is ignored.
    pub fn adjustments(&self, recent_words: &[String]) -> Vec<(u32, f64)> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        let keep = recent_words.len().min(self.max_order - 1);
        let tail = &recent_words[recent_words.len() - keep..];
        let mut hits: Vec<&[(u32, f64)]> = Vec::with_capacity(keep + 1);
        for k in 0..=keep {
            if let Some(row) = self.entries.get(&tail[keep - k..]) {
                hits.push(row);
            }
        }
        match hits.len() {
            0 => Vec::new(),
            1 => hits[0].to_vec(),
            _ => {
                let mut merged: Vec<(u32, f64)> = hits.concat();
                merged.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
                merged.dedup_by_key(|e| e.0);
                merged
            }
        }
    }

    /// Size of the vocabulary the table was built against.
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Returns `logprobs` with the applicable penalties subtracted.
    /// `recent_words` must already be case-folded.
    pub fn penalize(&self, recent_words: &[String], logprobs: &[f64]) -> Result<Vec<f64>> {
        if logprobs.len() != self.vocab_size {
            return Err(Error::LengthMismatch {
                expected: self.vocab_size,
                got: logprobs.len(),
            });
        }
        let mut out = logprobs.to_vec();
        for (id, p) in self.adjustments(recent_words) {
            out[id as usize] -= p;
        }
        Ok(out)
    }

    /// Debug dump. Contexts are sorted lexicographically, penalties by
    /// token id, values printed with six decimals.
    pub fn to_json(&self, vocab: &SubwordVocab) -> Result<String> {
        let mut contexts: Vec<&Vec<String>> = self.entries.keys().collect();
        contexts.sort();
        let mut out = format!("{{\"max_order\": {}, \"entries\": [", self.max_order);
        for (i, ctx) in contexts.iter().enumerate() {
            out.push_str(if i == 0 { "\n" } else { ",\n" });
            let words: Vec<String> = ctx
                .iter()
                .map(|w| serde_json::to_string(w).expect("strings serialize"))
                .collect();
            let _ = write!(
                out,
                "  {{\"context\": [{}], \"penalties\": {{",
                words.join(", ")
            );
            for (j, &(id, value)) in self.entries[*ctx].iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                let raw = serde_json::to_string(&vocab.get(id)?.raw).expect("strings serialize");
                let _ = write!(out, "{raw}: {value:.6}");
            }
            out.push_str("}}");
        }
        if !contexts.is_empty() {
            out.push('\n');
        }
        out.push_str("]}");
        Ok(out)
    }
}
