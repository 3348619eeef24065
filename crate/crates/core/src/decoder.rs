//! Penalized beam search.
//!
//! Every step asks the [`SequenceModel`] for next-token log-probabilities of
//! each live hypothesis, subtracts the n-gram penalties that apply to its
//! most recent words, and keeps the best `beam_size` continuations.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::penalty::{build_penalties, DecodeConfig, PenaltyTable};
use crate::vocab::{casefold, Subword, SubwordVocab};

/// Next-token scorer conditioned on a source sentence.
///
/// `score_step` must return one natural-log probability per vocabulary
/// entry, all `<= 0` and summing (in probability space) to one. It must be
/// deterministic: the same `(source, prefix)` always yields the same vector.
pub trait SequenceModel {
    fn score_step(&self, source: &str, prefix: &[u32]) -> Result<Vec<f64>>;
}

impl<M: SequenceModel + ?Sized> SequenceModel for &M {
    fn score_step(&self, source: &str, prefix: &[u32]) -> Result<Vec<f64>> {
        (**self).score_step(source, prefix)
    }
}

impl<M: SequenceModel + ?Sized> SequenceModel for Box<M> {
    fn score_step(&self, source: &str, prefix: &[u32]) -> Result<Vec<f64>> {
        (**self).score_step(source, prefix)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<u32>,
    /// Cumulative log-probability minus cumulative penalty.
    pub score: f64,
    /// Cumulative unpenalized log-probability.
    pub model_score: f64,
    /// Cumulative penalty charged so far.
    pub penalty: f64,
    /// Case-folded finished words, newest last, at most `keep_words` long.
    pub complete_words: Vec<String>,
    /// Surface of the word being generated, if any.
    pub pending: Option<String>,
    pub finished: bool,
    keep_words: usize,
}

impl Hypothesis {
    /// An empty hypothesis that remembers at most `max_order - 1` words.
    pub fn new(max_order: usize) -> Self {
        Self {
            tokens: Vec::new(),
            score: 0.0,
            model_score: 0.0,
            penalty: 0.0,
            complete_words: Vec::new(),
            pending: None,
            finished: false,
            keep_words: max_order.saturating_sub(1),
        }
    }

    fn close_pending(&mut self) {
        if let Some(word) = self.pending.take() {
            self.complete_words.push(casefold(&word));
            if self.complete_words.len() > self.keep_words {
                let excess = self.complete_words.len() - self.keep_words;
                self.complete_words.drain(..excess);
            }
        }
    }

    /// Appends `subword` and updates the word state. Scores are untouched.
    pub fn advance_word_state(&self, subword: &Subword, eos_id: u32) -> Result<Self> {
        if self.finished {
            return Err(Error::HypothesisFinished);
        }
        let mut next = self.clone();
        next.tokens.push(subword.id);
        if subword.id == eos_id {
            next.close_pending();
            next.finished = true;
        } else if subword.word_initial {
            next.close_pending();
            next.pending = Some(subword.surface.clone());
        } else {
            next.pending
                .get_or_insert_with(String::new)
                .push_str(&subword.surface);
        }
        Ok(next)
    }

    /// Words that precede a word-initial token emitted next: the finished
    /// words plus the pending one, which such a token would close. Folded,
    /// at most `max_order - 1` long.
    pub fn penalty_context(&self) -> Vec<String> {
        let mut words = self.complete_words.clone();
        if let Some(word) = &self.pending {
            words.push(casefold(word));
        }
        let excess = words.len().saturating_sub(self.keep_words);
        words.drain(..excess);
        words
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub text: String,
    pub tokens: Vec<u32>,
    /// Raw penalized score.
    pub score: f64,
    /// Score used for ranking: `score`, or `score / len` when length
    /// normalization is on.
    pub rank_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub best: String,
    pub best_tokens: Vec<u32>,
    /// Raw penalized score of the best hypothesis.
    pub score: f64,
    /// Unpenalized model score of the best hypothesis.
    pub model_score: f64,
    /// Sum of penalties charged to the best hypothesis.
    pub total_penalty: f64,
    /// Best first, at most `beam_size` entries.
    pub n_best: Vec<Candidate>,
    /// Search iterations run.
    pub steps: usize,
    /// No hypothesis emitted eos within `max_len`; `best` is a partial
    /// hypothesis.
    pub truncated: bool,
}

/// Decodes `source` with n-gram penalties built from `source` itself.
pub fn decode<M: SequenceModel + ?Sized>(
    model: &M,
    source: &str,
    vocab: &SubwordVocab,
    config: &DecodeConfig,
) -> Result<DecodeResult> {
    let table = build_penalties(source, vocab, config)?;
    beam_search(model, source, vocab, config, Some(&table))
}

/// Plain beam search: identical to [`decode`] with no penalty lookups.
pub fn decode_unpenalized<M: SequenceModel + ?Sized>(
    model: &M,
    source: &str,
    vocab: &SubwordVocab,
    config: &DecodeConfig,
) -> Result<DecodeResult> {
    if source.split_whitespace().next().is_none() {
        return Err(Error::EmptyInput);
    }
    beam_search(model, source, vocab, config, None)
}

/// Decodes every source in parallel. Results keep input order.
pub fn decode_batch<M, S>(
    model: &M,
    sources: &[S],
    vocab: &SubwordVocab,
    config: &DecodeConfig,
) -> Vec<Result<DecodeResult>>
where
    M: SequenceModel + Sync + ?Sized,
    S: AsRef<str> + Sync,
{
    sources
        .par_iter()
        .map(|s| decode(model, s.as_ref(), vocab, config))
        .collect()
}

struct Expansion {
    score: f64,
    token: u32,
    parent: usize,
    logprob: f64,
    penalty: f64,
}

/// Higher score first; ties go to the lower token id, then the earlier
/// parent.
fn expansion_order(a: &Expansion, b: &Expansion) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.token.cmp(&b.token))
        .then(a.parent.cmp(&b.parent))
}

fn rank_score(h: &Hypothesis, normalize: bool) -> f64 {
    if normalize && !h.tokens.is_empty() {
        h.score / h.tokens.len() as f64
    } else {
        h.score
    }
}

fn finished_order(a: &Hypothesis, b: &Hypothesis, normalize: bool) -> Ordering {
    rank_score(b, normalize)
        .total_cmp(&rank_score(a, normalize))
        .then_with(|| a.tokens.cmp(&b.tokens))
        .then(a.tokens.len().cmp(&b.tokens.len()))
}

/// Best rank score `h` could still reach if every future step cost nothing.
fn optimistic_bound(h: &Hypothesis, config: &DecodeConfig) -> f64 {
    if !config.length_normalize {
        return h.score;
    }
    let shortest = (h.tokens.len() + 1) as f64;
    let longest = config.max_len.max(h.tokens.len() + 1) as f64;
    if h.score <= 0.0 {
        h.score / longest
    } else {
        h.score / shortest
    }
}

fn beam_search<M: SequenceModel + ?Sized>(
    model: &M,
    source: &str,
    vocab: &SubwordVocab,
    config: &DecodeConfig,
    table: Option<&PenaltyTable>,
) -> Result<DecodeResult> {
    config.validate()?;
    let vocab_size = vocab.len();
    let eos = vocab.eos_id();
    let beam = config.beam_size;
    let normalize = config.length_normalize;

    let mut live = vec![Hypothesis::new(config.max_order)];
    let mut finished: Vec<Hypothesis> = Vec::new();
    let mut steps = 0;

    while steps < config.max_len && !live.is_empty() {
        steps += 1;
        let mut expansions = Vec::with_capacity(live.len() * vocab_size);
        for (parent, hyp) in live.iter().enumerate() {
            let logprobs = model.score_step(source, &hyp.tokens)?;
            if logprobs.len() != vocab_size {
                return Err(Error::LengthMismatch {
                    expected: vocab_size,
                    got: logprobs.len(),
                });
            }
            let adjustments = match table {
                Some(t) => t.adjustments(&hyp.penalty_context()),
                None => Vec::new(),
            };
            let mut pending_adj = adjustments.iter().peekable();
            for (id, &logprob) in logprobs.iter().enumerate() {
                let token = id as u32;
                let penalty = match pending_adj.peek() {
                    Some(&&(adj_id, p)) if adj_id == token => {
                        pending_adj.next();
                        p
                    }
                    _ => 0.0,
                };
                expansions.push(Expansion {
                    score: hyp.score + (logprob - penalty),
                    token,
                    parent,
                    logprob,
                    penalty,
                });
            }
        }

        // At most one eos per parent, so the top 2*beam always holds enough
        // non-eos continuations to refill the beam.
        let keep = (2 * beam).min(expansions.len());
        if keep < expansions.len() {
            expansions.select_nth_unstable_by(keep - 1, expansion_order);
            expansions.truncate(keep);
        }
        expansions.sort_unstable_by(expansion_order);

        let mut next = Vec::with_capacity(beam);
        for (rank, e) in expansions.iter().enumerate() {
            let is_eos = e.token == eos;
            if (is_eos && rank < beam) || (!is_eos && next.len() < beam) {
                let parent = &live[e.parent];
                let mut child = parent.advance_word_state(vocab.get(e.token)?, eos)?;
                child.score = parent.score + (e.logprob - e.penalty);
                child.model_score = parent.model_score + e.logprob;
                child.penalty = parent.penalty + e.penalty;
                if is_eos {
                    finished.push(child);
                } else {
                    next.push(child);
                }
            }
            if next.len() >= beam && rank + 1 >= beam {
                break;
            }
        }
        live = next;

        if finished.len() >= beam && !live.is_empty() {
            finished.sort_by(|a, b| finished_order(a, b, normalize));
            let cutoff = rank_score(&finished[beam - 1], normalize);
            let hopeful = live.iter().any(|h| optimistic_bound(h, config) > cutoff);
            if !hopeful {
                break;
            }
        }
    }

    let truncated = finished.is_empty();
    let mut pool = if truncated { live } else { finished };
    pool.sort_by(|a, b| finished_order(a, b, normalize));
    pool.truncate(beam);
    let best = pool
        .first()
        .cloned()
        .expect("beam search always keeps at least one hypothesis");

    let n_best = pool
        .iter()
        .map(|h| {
            Ok(Candidate {
                text: vocab.detokenize(&h.tokens)?,
                tokens: h.tokens.clone(),
                score: h.score,
                rank_score: rank_score(h, normalize),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(DecodeResult {
        best: n_best[0].text.clone(),
        best_tokens: best.tokens,
        score: best.score,
        model_score: best.model_score,
        total_penalty: best.penalty,
        n_best,
        steps,
        truncated,
    })
}
