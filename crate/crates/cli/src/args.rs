use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "rislink", version, about = "Simulate, optimize and analyze RIS-assisted links")]
pub struct Cli {
    /// Worker threads for internal parallelism (default: all cores).
    /// Outputs do not depend on it.
    #[arg(long, global = true, value_parser = parse_count)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Greedy codebook optimization at the scenario frequency.
    Optimize(OptimizeArgs),
    /// Optimize at one frequency, then sweep the frozen configuration.
    Sweep(SweepArgs),
    /// Phase standard deviation and equivalent bit number of a codebook.
    CodebookAnalyze(CodebookArgs),
    /// Optimize per codebook subset and report dB deltas.
    CompareResolutions(CompareArgs),
    /// Monte Carlo phase-quantization loss with ideal codebooks.
    QuantizationStudy(QuantizationArgs),
    /// Re-run a command from its manifest and compare outputs.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Optimize(_) => "optimize",
            Command::Sweep(_) => "sweep",
            Command::CodebookAnalyze(_) => "codebook-analyze",
            Command::CompareResolutions(_) => "compare-resolutions",
            Command::QuantizationStudy(_) => "quantization-study",
            Command::Replay(_) => "replay",
        }
    }

    pub fn out(&self) -> Option<&PathBuf> {
        match self {
            Command::Optimize(a) => Some(&a.out),
            Command::Sweep(a) => Some(&a.out),
            Command::CodebookAnalyze(a) => Some(&a.out),
            Command::CompareResolutions(a) => Some(&a.out),
            Command::QuantizationStudy(a) => Some(&a.out),
            Command::Replay(_) => None,
        }
    }

    pub fn set_out(&mut self, dir: PathBuf) {
        match self {
            Command::Optimize(a) => a.out = dir,
            Command::Sweep(a) => a.out = dir,
            Command::CodebookAnalyze(a) => a.out = dir,
            Command::CompareResolutions(a) => a.out = dir,
            Command::QuantizationStudy(a) => a.out = dir,
            Command::Replay(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OptimizerArgs {
    /// Maximum greedy passes.
    #[arg(long, default_value = "5", value_parser = parse_count)]
    pub iterations: usize,
    /// Relative per-pass improvement below which the sweep stops.
    #[arg(long, default_value = "1e-4", value_parser = parse_real)]
    pub epsilon: f64,
    /// Code every group starts in (default: the codebook's first state).
    #[arg(long)]
    pub start: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OptimizeArgs {
    /// Scenario JSON file, or `bundled:NAME`.
    #[arg(long)]
    pub scenario: String,
    /// Codebook JSON file, `measured`, or `ideal:M`.
    #[arg(long)]
    pub codebook: String,
    /// Restrict to a labelled subset such as `2-bit`.
    #[arg(long)]
    pub resolution: Option<String>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Log-normal measurement noise on each power reading, in dB.
    #[arg(long, value_parser = parse_real, requires = "seed")]
    pub noise_db: Option<f64>,
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub codebook: String,
    #[arg(long)]
    pub resolution: Option<String>,
    /// Optimization frequency in Hz.
    #[arg(long, value_parser = parse_real)]
    pub f_opt: f64,
    /// Sweep band `LO:HI` in Hz.
    #[arg(long, value_parser = parse_band)]
    pub band: (f64, f64),
    /// Sweep step in Hz.
    #[arg(long, value_parser = parse_real)]
    pub step: f64,
    /// Reference curve: `plate` or `uniform:CODE`.
    #[arg(long)]
    pub reference: Option<String>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Also write the curves as JSON.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CodebookArgs {
    #[arg(long)]
    pub codebook: String,
    /// Band `LO:HI` in Hz; needs `--step`.
    #[arg(long, value_parser = parse_band, requires = "step")]
    pub band: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_real, requires = "band")]
    pub step: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub codebook: String,
    /// Comma-separated subset labels.
    #[arg(long, value_delimiter = ',', default_value = "1-bit,2-bit,3-bit")]
    pub labels: Vec<String>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct QuantizationArgs {
    /// Lattice size `ROWSxCOLS`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: (usize, usize),
    /// Cell periodicity `DX:DY` in metres.
    #[arg(long, value_parser = parse_band, default_value = "0.0225:0.015")]
    pub pitch: (f64, f64),
    /// Comma-separated bit counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3", value_parser = parse_bits)]
    pub resolutions: Vec<u32>,
    #[arg(long, value_parser = parse_count)]
    pub trials: usize,
    #[arg(long, value_parser = parse_seed)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory for the re-run outputs (default: the original one).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_real(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Non-negative integer, also written as `1e3`.
pub fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.trim().parse::<usize>() {
        return Ok(n);
    }
    let x = parse_real(s)?;
    if x >= 0.0 && x.fract() == 0.0 && x <= 9_007_199_254_740_992.0 {
        Ok(x as usize)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.trim().parse::<u64>() {
        return Ok(n);
    }
    parse_count(s).map(|n| n as u64)
}

fn parse_bits(s: &str) -> Result<u32, String> {
    let n = parse_count(s)?;
    u32::try_from(n).map_err(|_| format!("`{s}` bits is too many"))
}

fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("`{s}` is not LO:HI"))?;
    Ok((parse_real(lo)?, parse_real(hi)?))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("`{s}` is not ROWSxCOLS"))?;
    Ok((parse_count(r)?, parse_count(c)?))
}
