//! `lcmp`: limiting spectra of sums of rank-one log-concave perturbations.
//!
//! Exit status is 0 when every check passes, 2 on operational failure and 3
//! when a verification criterion fails.

mod commands;
mod config;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "lcmp", version, about, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for the limiting density on a grid.
    Density(DensityArgs),
    /// Sample finite matrices and write their spectra.
    Simulate(SimulateArgs),
    /// Compare sampled spectra with the limit across dimensions.
    Compare(CompareArgs),
    /// Run one Monte Carlo check.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "lcmp-out")]
    pub out: PathBuf,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Ratio c = lim m/n.
    #[arg(long)]
    pub c: f64,
    /// Amplitude law, `atoms:t:w,...` or a JSON file.
    #[arg(long, default_value = "atoms:1:1", allow_hyphen_values = true)]
    pub sigma: String,
    /// Limit spectrum of H0: `atoms:x:w,...`, a measure JSON or a density CSV.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "h0_spectrum")]
    pub n0: Option<String>,
    /// File of H0 eigenvalues, one per line, used as N0.
    #[arg(long)]
    pub h0_spectrum: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    pub eps_final: f64,
    #[arg(long)]
    pub eps_start: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Replace amplitudes with |tau| >= T by zero.
    #[arg(long)]
    pub truncate: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `a:b:count`, uniform with endpoints moved inward by 1e-9.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct EnsembleArgs {
    /// Vector law: sphere, gauss, lp:P, cube, laplace or cgauss.
    #[arg(long, default_value = "sphere")]
    pub law: String,
    #[arg(long, default_value = "atoms:1:1", allow_hyphen_values = true)]
    pub sigma: String,
    /// H0: zero, diag:v1,v2,..., file:PATH or quantiles:atoms:x:w,...
    #[arg(long, default_value = "zero", allow_hyphen_values = true)]
    pub h0: String,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Histogram bins of the pooled spectrum.
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct CompareArgs {
    #[arg(long)]
    pub c: Option<f64>,
    /// Comma-separated vector laws; each gets its own study.
    #[arg(long, default_value = "sphere")]
    pub law: String,
    #[arg(long, default_value = "atoms:1:1", allow_hyphen_values = true)]
    pub sigma: String,
    #[arg(long, allow_hyphen_values = true)]
    pub n0: Option<String>,
    /// H0 of the samples; defaults to the quantiles of N0.
    #[arg(long, allow_hyphen_values = true)]
    pub h0: Option<String>,
    #[arg(long, default_value = "256,512,1024")]
    pub dims: String,
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub eps_final: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Grid points of the reconstructed limit.
    #[arg(long, default_value_t = 4000)]
    pub points: usize,
    /// Check the Gram duality of one sample instead of running a study.
    #[arg(long)]
    pub gram: bool,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    CountingVar,
    StieltjesVar,
    Quadform,
    Tail,
    Isotropy,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub check: Check,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Counting interval `a:b`, open on the left.
    #[arg(long, default_value = "0.25:2.25", allow_hyphen_values = true)]
    pub interval: String,
    /// Spectral parameter, e.g. `i`, `1+0.1i` or `re,im`.
    #[arg(long, default_value = "i", allow_hyphen_values = true)]
    pub z: String,
    #[arg(long, default_value = "64,128,256,512")]
    pub dims: String,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    /// Tail levels t >= 1.
    #[arg(long, default_value = "1,1.5,2")]
    pub t: String,
    #[command(flatten)]
    pub common: Common,
}

/// How a command ended when it did not error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    CriterionFailed,
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let args = match config::expand_config(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(&args);
    let flags = config::flag_map(args.get(2..).unwrap_or_default());
    match commands::run(&cli.command, &flags) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CriterionFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
