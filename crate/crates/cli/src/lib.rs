//! Batch front end for the k-graph KMS toolkit.
//!
//! `run` parses arguments, reads the graph, runs one command and returns the
//! exit code together with the JSON report.

pub mod commands;
pub mod input;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use kgraph_kms::Degree;
use serde_json::{json, Value};
use thiserror::Error;

pub use input::{parse_kgraph, read_kgraph, write_kgraph, InputError, EXAMPLE};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kgraph-kms", version, about = "KMS states of k-graph path-space algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: Config,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the k-graph axioms.
    Validate,
    /// Check 1-coalignedness (and list the ρ_f maps for single-vertex 2-graphs).
    Coaligned,
    /// Spectral radii, critical inverse temperatures and the Gelfand schedule.
    Spectra,
    /// f_β in closed form against the truncated series.
    Fbeta,
    /// Build φ_ε and run the KMS, round-trip and subinvariance checks.
    Kms,
    /// Ground state and the β → ∞ limit.
    Ground,
    /// The critical-temperature sequence under the preferred dynamics.
    Critical,
    /// Exact operator identities.
    Verify,
    /// Restrictions of φ_δ to the Toeplitz algebra.
    Restrict,
    /// Measures built from a vertex vector.
    Measure,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Coaligned => "coaligned",
            Command::Spectra => "spectra",
            Command::Fbeta => "fbeta",
            Command::Kms => "kms",
            Command::Ground => "ground",
            Command::Critical => "critical",
            Command::Verify => "verify",
            Command::Restrict => "restrict",
            Command::Measure => "measure",
        }
    }
}

#[derive(Clone, Debug, clap::Args)]
pub struct Config {
    /// k-graph file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Inverse temperature: a number or `lnX` for ln X.
    #[arg(long, global = true)]
    pub beta: Option<String>,
    /// Dynamics: comma-separated r, or `preferred`.
    #[arg(long, global = true)]
    pub r: Option<String>,
    /// Levels l of the measures (stored up to lD).
    #[arg(long, global = true, default_value_t = 2)]
    pub levels: u32,
    /// Fock window: comma list or a single entry for every color.
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// Depth of test vectors: comma list or a single entry.
    #[arg(long, global = true)]
    pub depth: Option<String>,
    /// Tolerance override for the numeric checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Report path; stdout if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{0}")]
    Config(String),
}

/// Result of one invocation.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    /// The report, when one was produced.
    pub report: Option<String>,
    /// A message for stderr.
    pub message: Option<String>,
}

impl Outcome {
    fn input_error(msg: String) -> Self {
        Outcome { code: EXIT_INPUT, report: None, message: Some(msg) }
    }
}

pub fn parse_beta(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let v = match s.strip_prefix("ln") {
        Some(rest) => rest.trim().parse::<f64>().map(f64::ln),
        None => s.parse::<f64>(),
    }
    .map_err(|_| CliError::Config(format!("bad --beta {s:?}")))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(CliError::Config(format!("--beta must be positive, got {s}")));
    }
    Ok(v)
}

/// `None` stands for the preferred dynamics.
pub fn parse_r(s: &str, k: usize) -> Result<Option<Vec<f64>>, CliError> {
    if s.trim() == "preferred" {
        return Ok(None);
    }
    let r = s
        .split(',')
        .map(|x| parse_beta(x).map_err(|_| CliError::Config(format!("bad --r entry {x:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if r.len() == 1 {
        return Ok(Some(vec![r[0]; k]));
    }
    if r.len() != k {
        return Err(CliError::Config(format!("--r has {} entries, the graph has k = {k}", r.len())));
    }
    Ok(Some(r))
}

pub fn parse_degree(s: &str, k: usize) -> Result<Degree, CliError> {
    let entries = s
        .split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|_| CliError::Config(format!("bad degree entry {x:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    match entries.len() {
        1 => Ok(Degree::new(vec![entries[0]; k])),
        n if n == k => Ok(Degree::new(entries)),
        n => Err(CliError::Config(format!("degree {s:?} has {n} entries, expected {k}"))),
    }
}

impl Config {
    pub fn to_json(&self, command: Command) -> Value {
        json!({
            "command": command.name(),
            "input": self.input.as_ref().map(|p| p.display().to_string()),
            "beta": self.beta,
            "r": self.r,
            "levels": self.levels,
            "window": self.window,
            "depth": self.depth,
            "tol": self.tol,
            "samples": self.samples,
            "seed": self.seed,
        })
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            return Outcome { code, report: None, message: Some(e.to_string()) };
        }
    };
    let Some(path) = cli.config.input.clone() else {
        return Outcome::input_error("--input is required".into());
    };
    let g = match read_kgraph(&path) {
        Ok(g) => g,
        Err(e) => return Outcome::input_error(format!("{}: {e}", path.display())),
    };
    let (pass, text) = match commands::execute(cli.command, &cli.config, &g) {
        Ok(r) => r.finish(),
        Err(e) => return Outcome::input_error(e.to_string()),
    };
    let code = if pass { EXIT_PASS } else { EXIT_CHECK_FAILED };
    if let Some(out) = &cli.config.out {
        if let Err(e) = std::fs::write(out, &text) {
            return Outcome::input_error(format!("{}: {e}", out.display()));
        }
    }
    Outcome { code, report: Some(text), message: None }
}
