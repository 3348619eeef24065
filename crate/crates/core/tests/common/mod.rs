//! Shared helpers for the integration tests: fixture access, a seeded random
//! sequence model, and brute-force reference implementations.

#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;
use std::sync::Arc;

use lexpen::vocab::{EOS_TOKEN, UNK_TOKEN};
use lexpen::{DecodeConfig, NgramLM, Result, SequenceModel, SubwordVocab};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn fixture_lines(name: &str) -> Vec<String> {
    std::fs::read_to_string(fixture(name))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect()
}

pub fn toy_vocab() -> Arc<SubwordVocab> {
    Arc::new(SubwordVocab::load(fixture("toy.vocab")).unwrap())
}

/// The regression LM: bigram, delta 0.1, over the committed corpus.
pub fn fixture_lm(vocab: Arc<SubwordVocab>) -> NgramLM {
    NgramLM::train(fixture("lm_corpus.txt"), 2, 0.1, vocab).unwrap()
}

/// Decoding settings for the LM fixture.
pub fn lm_config() -> DecodeConfig {
    DecodeConfig {
        max_len: 40,
        ..DecodeConfig::default()
    }
}

pub fn small_vocab(tokens: &[&str]) -> SubwordVocab {
    let mut all = vec![EOS_TOKEN, UNK_TOKEN];
    all.extend_from_slice(tokens);
    SubwordVocab::from_tokens(all).unwrap()
}

/// Log-softmax of seeded uniform logits; the seed mixes the instance seed
/// with the prefix, so each prefix gets its own fixed distribution.
#[derive(Debug, Clone)]
pub struct RandomModel {
    pub seed: u64,
    pub vocab_size: usize,
    pub spread: f64,
}

impl SequenceModel for RandomModel {
    fn score_step(&self, _source: &str, prefix: &[u32]) -> Result<Vec<f64>> {
        let mut h = DefaultHasher::new();
        (self.seed, prefix).hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        let logits: Vec<f64> = (0..self.vocab_size)
            .map(|_| rng.gen_range(-self.spread..self.spread))
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        Ok(logits.iter().map(|l| l - lse).collect())
    }
}

/// Penalty for emitting `token` after `prefix`, computed from scratch: the
/// words so far (the unfinished one counts as finished, since a
/// word-initial token closes it), then every input n-gram whose first n-1
/// words end that history and whose last word starts with the token.
pub fn direct_penalty(
    source: &str,
    vocab: &SubwordVocab,
    config: &DecodeConfig,
    prefix: &[u32],
    token: u32,
) -> f64 {
    let sw = &vocab.subwords()[token as usize];
    if token == vocab.eos_id() || !sw.word_initial || config.alpha == 0.0 {
        return 0.0;
    }
    let mut history: Vec<String> = Vec::new();
    for &t in prefix {
        let s = &vocab.subwords()[t as usize];
        if s.word_initial || history.is_empty() {
            history.push(String::new());
        }
        history
            .last_mut()
            .unwrap()
            .push_str(&s.surface.to_lowercase());
    }
    let words: Vec<String> = source
        .split_whitespace()
        .map(|w| w.to_lowercase())
        .collect();
    let piece = sw.surface.to_lowercase();
    if piece.is_empty() {
        return 0.0;
    }
    let mut best = 0.0f64;
    for n in 1..=config.max_order.min(words.len()) {
        if n - 1 > history.len() {
            continue;
        }
        let recent = &history[history.len() - (n - 1)..];
        for gram in words.windows(n) {
            if gram[..n - 1] == *recent && gram[n - 1].starts_with(&piece) {
                best = best.max(config.alpha * (n as f64).powf(config.beta));
            }
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct Enumerated {
    pub tokens: Vec<u32>,
    pub score: f64,
    pub rank: f64,
}

/// Every eos-terminated sequence of at most `max_len` tokens with its
/// penalized score, best first under the decoder's documented ordering.
pub fn enumerate_all<M: SequenceModel>(
    model: &M,
    source: &str,
    vocab: &SubwordVocab,
    config: &DecodeConfig,
) -> Vec<Enumerated> {
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 0.0)];
    while let Some((prefix, score)) = stack.pop() {
        let lp = model.score_step(source, &prefix).unwrap();
        for t in 0..vocab.len() as u32 {
            let pen = direct_penalty(source, vocab, config, &prefix, t);
            let s = score + (lp[t as usize] - pen);
            let mut seq = prefix.clone();
            seq.push(t);
            if t == vocab.eos_id() {
                let rank = if config.length_normalize {
                    s / seq.len() as f64
                } else {
                    s
                };
                out.push(Enumerated {
                    tokens: seq,
                    score: s,
                    rank,
                });
            } else if seq.len() < config.max_len {
                stack.push((seq, s));
            }
        }
    }
    out.sort_by(|a, b| {
        b.rank
            .total_cmp(&a.rank)
            .then_with(|| a.tokens.cmp(&b.tokens))
    });
    out
}

/// Uncased BLEU-4 straight from the textbook definition, for cross-checks.
pub fn reference_bleu(pairs: &[(String, String)]) -> f64 {
    use std::collections::HashMap;
    let mut matches = [0u64; 4];
    let mut totals = [0u64; 4];
    let (mut c_len, mut r_len) = (0u64, 0u64);
    for (c, r) in pairs {
        let c: Vec<String> = c.split_whitespace().map(|w| w.to_lowercase()).collect();
        let r: Vec<String> = r.split_whitespace().map(|w| w.to_lowercase()).collect();
        c_len += c.len() as u64;
        r_len += r.len() as u64;
        for n in 1..=4 {
            let mut rc: HashMap<&[String], u64> = HashMap::new();
            for g in r.windows(n) {
                *rc.entry(g).or_default() += 1;
            }
            let mut cc: HashMap<&[String], u64> = HashMap::new();
            for g in c.windows(n) {
                *cc.entry(g).or_default() += 1;
            }
            totals[n - 1] += c.len().saturating_sub(n - 1) as u64;
            matches[n - 1] += cc
                .iter()
                .map(|(g, k)| (*k).min(*rc.get(g).unwrap_or(&0)))
                .sum::<u64>();
        }
    }
    if matches.contains(&0) {
        return 0.0;
    }
    let logp: f64 = (0..4)
        .map(|i| (matches[i] as f64 / totals[i] as f64).ln())
        .sum::<f64>()
        / 4.0;
    let bp = if c_len < r_len {
        (1.0 - r_len as f64 / c_len as f64).exp()
    } else {
        1.0
    };
    100.0 * bp * logp.exp()
}

pub fn random_words<R: Rng>(rng: &mut R, pool: &[&str], n: usize) -> String {
    (0..n)
        .map(|_| pool[rng.gen_range(0..pool.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

pub const WORD_POOL: &[&str] = &[
    "the", "theatre", "then", "to", "store", "stone", "she", "his", "her", "home", "went", "a",
    "an", "and", "cat", "mat", "sat", "on", "over", "ever", "river", "read", "red", "é", "éte",
    "straße", "ab", "abc",
];

/// One randomized penalizer case: vocabulary, input, settings, recent
/// words and a log-prob vector.
#[derive(Debug)]
pub struct PenaltyCase {
    pub vocab: SubwordVocab,
    pub input: String,
    pub config: DecodeConfig,
    pub recent: Vec<String>,
    pub logprobs: Vec<f64>,
}

fn random_case_variant<R: Rng>(rng: &mut R, w: &str) -> String {
    match rng.gen_range(0..4) {
        0 => w.to_uppercase(),
        1 => {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
                None => String::new(),
            }
        }
        _ => w.to_string(),
    }
}

pub fn random_penalty_case<R: Rng>(rng: &mut R) -> PenaltyCase {
    let size = rng.gen_range(3..=200);
    let mut tokens: Vec<String> = vec![EOS_TOKEN.into(), UNK_TOKEN.into()];
    let mut tries = 0;
    while tokens.len() < size && tries < 2000 {
        tries += 1;
        let w = WORD_POOL[rng.gen_range(0..WORD_POOL.len())];
        let w = random_case_variant(rng, w);
        let chars: Vec<char> = w.chars().collect();
        let a = rng.gen_range(0..chars.len());
        let b = rng.gen_range(a + 1..=chars.len());
        let piece: String = chars[a..b].iter().collect();
        let tok = if rng.gen_bool(0.6) {
            format!("\u{2581}{piece}")
        } else {
            piece
        };
        if !tokens.contains(&tok) {
            tokens.push(tok);
        }
    }
    let vocab = SubwordVocab::from_tokens(tokens).unwrap();
    let n_words = rng.gen_range(1..=12);
    let words: Vec<String> = (0..n_words)
        .map(|_| {
            let w = WORD_POOL[rng.gen_range(0..WORD_POOL.len())];
            random_case_variant(rng, w)
        })
        .collect();
    let max_order = rng.gen_range(1..=4);
    let config = DecodeConfig {
        alpha: if rng.gen_bool(0.05) {
            0.0
        } else {
            rng.gen_range(0.0..=0.1)
        },
        beta: if rng.gen_bool(0.5) { 1.0 } else { 4.0 },
        max_order,
        ..DecodeConfig::default()
    };
    let ctx_len = rng.gen_range(0..max_order);
    let recent: Vec<String> = if rng.gen_bool(0.7) && ctx_len <= words.len() {
        let start = rng.gen_range(0..=words.len() - ctx_len);
        words[start..start + ctx_len]
            .iter()
            .map(|w| w.to_lowercase())
            .collect()
    } else {
        (0..ctx_len)
            .map(|_| WORD_POOL[rng.gen_range(0..WORD_POOL.len())].to_string())
            .collect()
    };
    let logprobs = (0..vocab.len())
        .map(|_| rng.gen_range(-20.0..0.0))
        .collect();
    PenaltyCase {
        vocab,
        input: words.join(" "),
        config,
        recent,
        logprobs,
    }
}

/// A decode problem small enough to enumerate: at most 5 tokens, at most 4
/// steps, and a beam wide enough to never prune.
#[derive(Debug)]
pub struct TinyCase {
    pub vocab: SubwordVocab,
    pub source: String,
    pub model: RandomModel,
    pub config: DecodeConfig,
}

pub fn random_tiny_case<R: Rng>(rng: &mut R, length_normalize: bool) -> TinyCase {
    const PIECES: &[&str] = &[
        "\u{2581}a",
        "\u{2581}A",
        "a",
        "\u{2581}b",
        "b",
        "\u{2581}ab",
        "\u{2581}ba",
    ];
    const WORDS: &[&str] = &["a", "b", "ab", "A", "ba", "aa", "B"];
    let extra = rng.gen_range(1..=3);
    let mut tokens: Vec<&str> = Vec::new();
    while tokens.len() < extra {
        let p = PIECES[rng.gen_range(0..PIECES.len())];
        if !tokens.contains(&p) {
            tokens.push(p);
        }
    }
    let vocab = small_vocab(&tokens);
    let max_len = rng.gen_range(1..=4);
    let n_words = rng.gen_range(1..=4);
    let config = DecodeConfig {
        alpha: if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen_range(0.0..1.5)
        },
        beta: [1.0, 2.0, 4.0][rng.gen_range(0..3)],
        max_order: rng.gen_range(1..=4),
        beam_size: vocab.len().pow(max_len as u32),
        max_len,
        length_normalize,
    };
    TinyCase {
        source: random_words(rng, WORDS, n_words),
        model: RandomModel {
            seed: rng.gen(),
            vocab_size: vocab.len(),
            spread: 2.0,
        },
        vocab,
        config,
    }
}
