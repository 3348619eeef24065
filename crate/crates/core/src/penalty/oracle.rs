//! Reference penalizer used to validate [`PenaltyTable`](super::PenaltyTable).
//!
//! Scans every (input n-gram, subword) pair directly with no table and no
//! prefix index: O(|V| * #ngrams) per call. Slow on purpose; it shares no
//! code with the table builder beyond the vocabulary's raw fields.

use crate::error::{Error, Result};
use crate::penalty::DecodeConfig;
use crate::vocab::SubwordVocab;

pub fn oracle_penalize(
    input: &str,
    vocab: &SubwordVocab,
    config: &DecodeConfig,
    word_suffix: &[String],
    logprobs: &[f64],
) -> Result<Vec<f64>> {
    if logprobs.len() != vocab.len() {
        return Err(Error::LengthMismatch {
            expected: vocab.len(),
            got: logprobs.len(),
        });
    }
    let words: Vec<String> = input.split_whitespace().map(str::to_lowercase).collect();
    if words.is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut out = logprobs.to_vec();
    for sw in vocab.subwords() {
        if !sw.word_initial || sw.id == vocab.eos_id() || sw.surface_folded.is_empty() {
            continue;
        }
        let mut best: Option<f64> = None;
        for n in 1..=config.max_order {
            if n > words.len() || n - 1 > word_suffix.len() {
                continue;
            }
            let recent = &word_suffix[word_suffix.len() - (n - 1)..];
            for start in 0..=words.len() - n {
                let gram = &words[start..start + n];
                if gram[..n - 1] != *recent || !gram[n - 1].starts_with(&sw.surface_folded) {
                    continue;
                }
                let p = config.alpha * (n as f64).powf(config.beta);
                best = Some(best.map_or(p, |b: f64| b.max(p)));
            }
        }
        if let Some(p) = best {
            if p > 0.0 {
                out[sw.id as usize] -= p;
            }
        }
    }
    Ok(out)
}
