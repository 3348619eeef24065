//! Choosing alpha for a target lexical diversity.
//!
//! Diversity is corpus BLEU of decoder output against its input. It falls as
//! alpha grows, but only roughly: beam search output jumps discretely, so the
//! bisection keeps the best probe seen and logs any non-monotone step instead
//! of trusting the bracket blindly.

use log::warn;

use crate::bleu::{bleu_from_stats, bleu_stats, BleuStats};
use crate::decoder::{decode_batch, DecodeResult, SequenceModel};
use crate::error::{Error, Result};
use crate::penalty::DecodeConfig;
use crate::vocab::SubwordVocab;

/// Output of one decode pass over a sentence list at a fixed alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityProbe {
    pub alpha: f64,
    pub bleu: f64,
    pub mean_total_penalty: f64,
    pub outputs: Vec<DecodeResult>,
}

/// BLEU statistics of `output` against `input`. An empty output still
/// counts its input length toward the brevity penalty.
fn output_stats(output: &str, input: &str) -> Result<BleuStats> {
    if output.split_whitespace().next().is_none() {
        return Ok(BleuStats {
            reference_length: input.split_whitespace().count() as u64,
            ..BleuStats::default()
        });
    }
    bleu_stats(output, input)
}

/// Decodes every sentence at `alpha` and scores the outputs against their
/// inputs.
pub fn probe_diversity<M, S>(
    alpha: f64,
    model: &M,
    sentences: &[S],
    vocab: &SubwordVocab,
    base: &DecodeConfig,
) -> Result<DiversityProbe>
where
    M: SequenceModel + Sync + ?Sized,
    S: AsRef<str> + Sync,
{
    if sentences.is_empty() {
        return Err(Error::NoStats);
    }
    let config = base.with_alpha(alpha);
    let outputs = decode_batch(model, sentences, vocab, &config)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut total = BleuStats::default();
    for (out, input) in outputs.iter().zip(sentences) {
        total = total + output_stats(&out.best, input.as_ref())?;
    }
    let mean_total_penalty =
        outputs.iter().map(|o| o.total_penalty).sum::<f64>() / outputs.len() as f64;
    Ok(DiversityProbe {
        alpha,
        bleu: bleu_from_stats(&total),
        mean_total_penalty,
        outputs,
    })
}

/// Corpus BLEU(output, input) at `alpha`.
pub fn diversity_at<M, S>(
    alpha: f64,
    model: &M,
    sentences: &[S],
    vocab: &SubwordVocab,
    base: &DecodeConfig,
) -> Result<f64>
where
    M: SequenceModel + Sync + ?Sized,
    S: AsRef<str> + Sync,
{
    Ok(probe_diversity(alpha, model, sentences, vocab, base)?.bleu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSpec {
    pub target_bleu: f64,
    /// Accepted distance from the target, in BLEU points.
    pub tolerance: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// Total probe budget, the two bracket endpoints included.
    pub max_iters: usize,
    /// Decoding settings; its alpha is ignored.
    pub base: DecodeConfig,
}

impl CalibrationSpec {
    pub fn new(target_bleu: f64, base: DecodeConfig) -> Self {
        Self {
            target_bleu,
            tolerance: 1.0,
            alpha_lo: 0.0,
            alpha_hi: 0.05,
            max_iters: 20,
            base,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidCalibration(m.to_string()));
        if !self.target_bleu.is_finite() {
            return bad("target BLEU must be finite");
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return bad("tolerance must be > 0");
        }
        if !(self.alpha_lo >= 0.0 && self.alpha_lo < self.alpha_hi && self.alpha_hi.is_finite()) {
            return bad("need 0 <= alpha_lo < alpha_hi");
        }
        if self.max_iters < 2 {
            return bad("max_iters must allow probing both bracket endpoints");
        }
        self.base.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub alpha: f64,
    pub achieved_bleu: f64,
    /// Whether `achieved_bleu` is within tolerance of the target.
    pub converged: bool,
    /// Every `(alpha, bleu)` evaluated, in order.
    pub probes: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// Bisects alpha until corpus BLEU is within `spec.tolerance` of the
/// target or the probe budget runs out; returns the closest probe.
pub fn calibrate_alpha<M, S>(
    spec: &CalibrationSpec,
    model: &M,
    sentences: &[S],
    vocab: &SubwordVocab,
) -> Result<Calibration>
where
    M: SequenceModel + Sync + ?Sized,
    S: AsRef<str> + Sync,
{
    spec.validate()?;
    let target = spec.target_bleu;
    let tol = spec.tolerance;
    let mut probes = Vec::new();
    let mut warnings = Vec::new();
    let run = |alpha: f64, probes: &mut Vec<(f64, f64)>| -> Result<f64> {
        let bleu = diversity_at(alpha, model, sentences, vocab, &spec.base)?;
        probes.push((alpha, bleu));
        Ok(bleu)
    };
    let finish =
        |alpha: f64, bleu: f64, probes: Vec<(f64, f64)>, warnings: Vec<String>| Calibration {
            alpha,
            achieved_bleu: bleu,
            converged: (bleu - target).abs() <= tol,
            probes,
            warnings,
        };

    let (mut lo, mut hi) = (spec.alpha_lo, spec.alpha_hi);
    let mut bleu_lo = run(lo, &mut probes)?;
    let mut bleu_hi = run(hi, &mut probes)?;
    if bleu_lo < target - tol || bleu_hi > target + tol {
        return Err(Error::NotBracketed {
            target,
            tolerance: tol,
            alpha_lo: lo,
            alpha_hi: hi,
            bleu_lo,
            bleu_hi,
        });
    }
    if (bleu_lo - target).abs() <= tol {
        return Ok(finish(lo, bleu_lo, probes, warnings));
    }
    if (bleu_hi - target).abs() <= tol {
        return Ok(finish(hi, bleu_hi, probes, warnings));
    }

    let mut best = if (bleu_lo - target).abs() <= (bleu_hi - target).abs() {
        (lo, bleu_lo)
    } else {
        (hi, bleu_hi)
    };
    while probes.len() < spec.max_iters {
        let mid = 0.5 * (lo + hi);
        let bleu = run(mid, &mut probes)?;
        if bleu > bleu_lo || bleu < bleu_hi {
            let msg = format!(
                "BLEU is not monotone around alpha {mid}: {bleu:.4} outside [{bleu_hi:.4}, {bleu_lo:.4}]"
            );
            warn!("{msg}");
            warnings.push(msg);
        }
        if (bleu - target).abs() < (best.1 - target).abs() {
            best = (mid, bleu);
        }
        if (bleu - target).abs() <= tol {
            break;
        }
        if bleu > target {
            lo = mid;
            bleu_lo = bleu;
        } else {
            hi = mid;
            bleu_hi = bleu;
        }
    }
    Ok(finish(best.0, best.1, probes, warnings))
}
