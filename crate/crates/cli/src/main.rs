//! Experiment runner command line.
//!
//! One subcommand per experiment id; parameters come from an optional
//! flat TOML config file, overridden by the named flags and trailing
//! `key=value` pairs. Exit codes: 0 success, 1 usage/config error,
//! 2 runtime error.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use risklab_cli::config::{build_config, ExperimentId};
use risklab_cli::runner::run_experiment;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "risklab",
    about = "Risk decompositions, surrogate bounds and double-descent curves for two interpolating predictors",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat TOML config file; command-line values override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (overrides the config key).
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replicates (overrides the config key).
    #[arg(long)]
    replicates: Option<u64>,
    /// Output directory (overrides the config key and RISKLAB_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for replicated runs (results are identical at any
    /// parallelism).
    #[arg(long)]
    parallelism: Option<usize>,
    /// Additional key=value config overrides.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Effective-rank diagnostics of a covariance spectrum over an n-grid.
    Spectra(CommonArgs),
    /// Per-replicate three-term decomposition of the interpolator's gap.
    LinregDecompose(CommonArgs),
    /// Expected-risk bound table over an n-grid.
    LinregBound(CommonArgs),
    /// Sup-gap lower bound at the label-flipped dataset.
    LinregUcProbe(CommonArgs),
    /// Exact and empirical risks of the hypercube rule.
    HypercubeRisk(CommonArgs),
    /// Pair-count bounds and Monte Carlo risks of the rerandomization
    /// surrogate.
    HypercubeSurrogate(CommonArgs),
    /// Double-descent bound curve over a dimension grid.
    HypercubeDdcurve(CommonArgs),
    /// Adversarially trained rule's generalization-gap probe.
    HypercubeAdversary(CommonArgs),
}

impl Command {
    fn split(self) -> (ExperimentId, CommonArgs) {
        match self {
            Command::Spectra(a) => (ExperimentId::Spectra, a),
            Command::LinregDecompose(a) => (ExperimentId::LinregDecompose, a),
            Command::LinregBound(a) => (ExperimentId::LinregBound, a),
            Command::LinregUcProbe(a) => (ExperimentId::LinregUcProbe, a),
            Command::HypercubeRisk(a) => (ExperimentId::HypercubeRisk, a),
            Command::HypercubeSurrogate(a) => (ExperimentId::HypercubeSurrogate, a),
            Command::HypercubeDdcurve(a) => (ExperimentId::HypercubeDdcurve, a),
            Command::HypercubeAdversary(a) => (ExperimentId::HypercubeAdversary, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    return ExitCode::SUCCESS;
                }
                _ => {}
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    let (experiment, args) = cli.command.split();

    let file_text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => Some(text),
            Err(e) => {
                eprintln!("error: cannot read config {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };

    let mut overrides: Vec<(String, String)> = Vec::new();
    for pair in &args.set {
        match pair.split_once('=') {
            Some((key, value)) => overrides.push((key.trim().into(), value.trim().into())),
            None => {
                eprintln!("error: override '{pair}' is not of the form key=value");
                return ExitCode::from(1);
            }
        }
    }
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(replicates) = args.replicates {
        overrides.push(("replicates".into(), replicates.to_string()));
    }
    if let Some(parallelism) = args.parallelism {
        overrides.push(("parallelism".into(), parallelism.to_string()));
    }
    if let Some(out) = &args.out {
        overrides.push(("out".into(), out.to_string_lossy().into_owned()));
    }

    let config = match build_config(Some(experiment), file_text.as_deref(), &overrides) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    match run_experiment(&config) {
        Ok(output) => {
            for warning in &output.warnings {
                eprintln!("warning: {warning}");
            }
            for file in &output.files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
