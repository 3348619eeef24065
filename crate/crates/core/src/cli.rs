//! `lexpen` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bleu::sentence_bleu;
use crate::calibrate::{calibrate_alpha, probe_diversity, CalibrationSpec};
use crate::decoder::{decode_batch, DecodeResult};
use crate::error::{Error, Result};
use crate::models::{ModelSpec, SharedModel};
use crate::penalty::{build_penalties, DecodeConfig};
use crate::vocab::SubwordVocab;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lexpen",
    version,
    about = "Paraphrase decoding with soft n-gram overlap penalties"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decode each input line and print one JSON record per line.
    Paraphrase(ParaphraseArgs),
    /// Corpus BLEU(input, output) over an alpha grid, or calibrate alpha to a target.
    Sweep(SweepArgs),
    /// Dump the penalty table built for one sentence as JSON.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// Vocabulary file, one token per line.
    #[arg(long)]
    vocab: PathBuf,
    /// `copy[:g=2.0]` or `ngram:order=3,delta=0.1,corpus=PATH`.
    #[arg(long, value_parser = parse_model)]
    model: ModelSpec,
    #[arg(long, default_value_t = 4.0)]
    beta: f64,
    #[arg(long, default_value_t = 5)]
    beam: usize,
    #[arg(long, default_value_t = 4)]
    max_order: usize,
    #[arg(long, default_value_t = 200)]
    max_len: usize,
    /// Rank hypotheses by raw cumulative score instead of score per token.
    #[arg(long)]
    raw_scores: bool,
    /// Input sentences, one per line (default: stdin).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParaphraseArgs {
    #[command(flatten)]
    decode: DecodeArgs,
    /// Penalty weight; 0.0005, 0.003 and 0.006 are the usual presets.
    #[arg(long, default_value_t = 0.003)]
    alpha: f64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["alphas", "target_bleu"])))]
struct SweepArgs {
    #[command(flatten)]
    decode: DecodeArgs,
    /// Comma-separated alpha grid.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Find the alpha whose corpus BLEU(input, output) matches this value.
    #[arg(long)]
    target_bleu: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    tolerance: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha_lo: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha_hi: f64,
    #[arg(long, default_value_t = 20)]
    max_iters: usize,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    sentence: String,
    #[arg(long, default_value_t = 0.003)]
    alpha: f64,
    #[arg(long, default_value_t = 4.0)]
    beta: f64,
    #[arg(long, default_value_t = 4)]
    max_order: usize,
}

fn parse_model(s: &str) -> std::result::Result<ModelSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// One decoded line of `paraphrase` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub input: String,
    pub output: String,
    pub alpha: f64,
    pub beta: f64,
    pub beam: usize,
    pub score: f64,
    pub total_penalty: f64,
    /// Sentence BLEU of output against input, effective order.
    pub input_output_bleu: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub input: String,
    pub error: String,
}

impl RunRecord {
    pub fn new(input: &str, result: &DecodeResult, config: &DecodeConfig) -> Self {
        let input_output_bleu = sentence_bleu(&result.best, input).unwrap_or(0.0);
        Self {
            input: input.to_string(),
            output: result.best.clone(),
            alpha: config.alpha,
            beta: config.beta,
            beam: config.beam_size,
            score: result.score,
            total_penalty: result.total_penalty,
            input_output_bleu,
            truncated: result.truncated,
        }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Paraphrase(a) => paraphrase(a, stdin, stdout, stderr),
        Command::Sweep(a) => sweep(a, stdin, stdout, stderr),
        Command::Inspect(a) => inspect(a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn read_lines(input: &Option<PathBuf>, stdin: &mut dyn BufRead) -> Result<Vec<String>> {
    let text = match input {
        Some(path) => fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?,
        None => {
            let mut buf = String::new();
            stdin.read_to_string(&mut buf).map_err(|source| Error::Io {
                path: "<stdin>".into(),
                source,
            })?;
            buf
        }
    };
    Ok(text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect())
}

fn load(args: &DecodeArgs, alpha: f64) -> Result<(Arc<SubwordVocab>, SharedModel, DecodeConfig)> {
    let config = DecodeConfig {
        alpha,
        beta: args.beta,
        max_order: args.max_order,
        beam_size: args.beam,
        max_len: args.max_len,
        length_normalize: !args.raw_scores,
    };
    config.validate()?;
    let vocab = Arc::new(SubwordVocab::load(&args.vocab)?);
    let model = args.model.build(vocab.clone())?;
    Ok((vocab, model, config))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

fn paraphrase(
    args: ParaphraseArgs,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<u8> {
    let (vocab, model, config) = load(&args.decode, args.alpha)?;
    let lines = read_lines(&args.decode.input, stdin)?;
    let results = decode_batch(&*model, &lines, &vocab, &config);
    let mut failed = 0usize;
    for (input, result) in lines.iter().zip(results) {
        let json = match result {
            Ok(r) => serde_json::to_string(&RunRecord::new(input, &r, &config)),
            Err(e) => {
                failed += 1;
                serde_json::to_string(&ErrorRecord {
                    input: input.clone(),
                    error: e.to_string(),
                })
            }
        }
        .expect("records serialize");
        writeln!(stdout, "{json}").map_err(io_err)?;
    }
    if failed > 0 {
        let _ = writeln!(
            stderr,
            "error: {failed} of {} lines failed to decode",
            lines.len()
        );
        return Ok(EXIT_FAILURE);
    }
    Ok(EXIT_OK)
}

fn sweep(
    args: SweepArgs,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<u8> {
    let (vocab, model, config) = load(&args.decode, 0.0)?;
    let sentences: Vec<String> = read_lines(&args.decode.input, stdin)?
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .collect();

    if let Some(alphas) = &args.alphas {
        writeln!(stdout, "alpha\tcorpus_bleu\tmean_total_penalty").map_err(io_err)?;
        for &alpha in alphas {
            let probe = probe_diversity(alpha, &*model, &sentences, &vocab, &config)?;
            writeln!(
                stdout,
                "{}\t{:.4}\t{:.6}",
                alpha, probe.bleu, probe.mean_total_penalty
            )
            .map_err(io_err)?;
        }
        return Ok(EXIT_OK);
    }

    let target = args.target_bleu.expect("clap enforces one sweep mode");
    let spec = CalibrationSpec {
        target_bleu: target,
        tolerance: args.tolerance,
        alpha_lo: args.alpha_lo,
        alpha_hi: args.alpha_hi,
        max_iters: args.max_iters,
        base: config,
    };
    let cal = calibrate_alpha(&spec, &*model, &sentences, &vocab)?;
    for w in &cal.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    if !cal.converged {
        let _ = writeln!(
            stderr,
            "warning: no alpha within {} BLEU of {} after {} probes; reporting the closest",
            spec.tolerance,
            target,
            cal.probes.len()
        );
    }
    writeln!(stdout, "alpha\tcorpus_bleu").map_err(io_err)?;
    writeln!(stdout, "{}\t{:.4}", cal.alpha, cal.achieved_bleu).map_err(io_err)?;
    Ok(EXIT_OK)
}

fn inspect(args: InspectArgs, stdout: &mut dyn Write) -> Result<u8> {
    let config = DecodeConfig {
        alpha: args.alpha,
        beta: args.beta,
        max_order: args.max_order,
        ..DecodeConfig::default()
    };
    let vocab = SubwordVocab::load(&args.vocab)?;
    let table = build_penalties(&args.sentence, &vocab, &config)?;
    writeln!(stdout, "{}", table.to_json(&vocab)?).map_err(io_err)?;
    Ok(EXIT_OK)
}
