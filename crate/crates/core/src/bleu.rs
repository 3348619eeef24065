//! Uncased corpus BLEU on whitespace tokens, used as the lexical-diversity
//! axis (BLEU of output against input: lower means more diverse).

use std::collections::HashMap;
use std::iter::Sum;
use std::ops::Add;

use crate::error::{Error, Result};
use crate::vocab::casefold;

pub const MAX_ORDER: usize = 4;

/// Sufficient statistics for BLEU. Additive across sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub clipped_matches: [u64; MAX_ORDER],
    pub candidate_counts: [u64; MAX_ORDER],
    pub candidate_length: u64,
    pub reference_length: u64,
}

impl Add for BleuStats {
    type Output = BleuStats;

    fn add(mut self, rhs: BleuStats) -> BleuStats {
        for n in 0..MAX_ORDER {
            self.clipped_matches[n] += rhs.clipped_matches[n];
            self.candidate_counts[n] += rhs.candidate_counts[n];
        }
        self.candidate_length += rhs.candidate_length;
        self.reference_length += rhs.reference_length;
        self
    }
}

impl Sum for BleuStats {
    fn sum<I: Iterator<Item = BleuStats>>(iter: I) -> BleuStats {
        iter.fold(BleuStats::default(), Add::add)
    }
}

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(casefold).collect()
}

fn ngram_counts(toks: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut out = HashMap::new();
    for w in toks.windows(n) {
        *out.entry(w).or_insert(0) += 1;
    }
    out
}

/// Clipped n-gram matches of `candidate` against one `reference`, after
/// lowercasing both.
pub fn bleu_stats(candidate: &str, reference: &str) -> Result<BleuStats> {
    let cand = tokens(candidate);
    let refr = tokens(reference);
    if cand.is_empty() || refr.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut stats = BleuStats {
        candidate_length: cand.len() as u64,
        reference_length: refr.len() as u64,
        ..BleuStats::default()
    };
    for n in 1..=MAX_ORDER {
        let ref_counts = ngram_counts(&refr, n);
        let cand_counts = ngram_counts(&cand, n);
        stats.candidate_counts[n - 1] = cand.len().saturating_sub(n - 1) as u64;
        stats.clipped_matches[n - 1] = cand_counts
            .iter()
            .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
    }
    Ok(stats)
}

/// BLEU in [0, 100] from already-summed statistics. No smoothing: a zero
/// precision at any order gives 0.
pub fn bleu_from_stats(stats: &BleuStats) -> f64 {
    if stats.candidate_length == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 0..MAX_ORDER {
        if stats.clipped_matches[n] == 0 || stats.candidate_counts[n] == 0 {
            return 0.0;
        }
        log_sum += (stats.clipped_matches[n] as f64 / stats.candidate_counts[n] as f64).ln();
    }
    let ratio = stats.reference_length as f64 / stats.candidate_length as f64;
    let bp = if ratio > 1.0 {
        (1.0 - ratio).exp()
    } else {
        1.0
    };
    100.0 * bp * (log_sum / MAX_ORDER as f64).exp()
}

/// Sentence-level BLEU with effective order: orders the candidate is too
/// short to contain are left out of the geometric mean, so a short exact
/// copy still scores 100. Any remaining order with no match gives 0.
pub fn sentence_bleu(candidate: &str, reference: &str) -> Result<f64> {
    let stats = bleu_stats(candidate, reference)?;
    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 0..MAX_ORDER {
        if stats.candidate_counts[n] == 0 {
            continue;
        }
        if stats.clipped_matches[n] == 0 {
            return Ok(0.0);
        }
        log_sum += (stats.clipped_matches[n] as f64 / stats.candidate_counts[n] as f64).ln();
        orders += 1;
    }
    let ratio = stats.reference_length as f64 / stats.candidate_length as f64;
    let bp = if ratio > 1.0 {
        (1.0 - ratio).exp()
    } else {
        1.0
    };
    Ok(100.0 * bp * (log_sum / orders as f64).exp())
}

/// Corpus BLEU: sums the per-sentence statistics, then scores once.
pub fn corpus_bleu(stats: &[BleuStats]) -> Result<f64> {
    if stats.is_empty() {
        return Err(Error::NoStats);
    }
    Ok(bleu_from_stats(&stats.iter().copied().sum()))
}

/// Corpus BLEU of `candidates` against the aligned `references`.
pub fn corpus_bleu_pairs<C, R>(candidates: &[C], references: &[R]) -> Result<f64>
where
    C: AsRef<str>,
    R: AsRef<str>,
{
    assert_eq!(candidates.len(), references.len(), "unaligned corpus");
    let stats = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| bleu_stats(c.as_ref(), r.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    corpus_bleu(&stats)
}

/// Per-order clipped precision, 0 where the candidate has no n-grams.
pub fn overlap_profile(candidate: &str, reference: &str) -> Result<[f64; MAX_ORDER]> {
    let s = bleu_stats(candidate, reference)?;
    Ok(std::array::from_fn(|n| match s.candidate_counts[n] {
        0 => 0.0,
        total => s.clipped_matches[n] as f64 / total as f64,
    }))
}
