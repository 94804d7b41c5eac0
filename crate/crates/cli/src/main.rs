//! `prpd`: generate synthetic PRPD corpora, extract features, train and
//! evaluate classifiers, classify new signals and render heatmaps.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 invalid data or
//! I/O failure, 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prpd_core::{Dims, FeatureKind, DEFAULT_THRESHOLD};

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(name = "prpd", version, about = "Phase-resolved partial discharge classification")]
struct Cli {
    #[command(flatten)]
    shape: Shape,
    #[command(subcommand)]
    command: Command,
}

/// Signal dimensions of every dataset read or written.
#[derive(Debug, Clone, Copy, Args)]
struct Shape {
    /// Phases per cycle.
    #[arg(long, global = true, default_value_t = 64)]
    phases: usize,
    /// Cycles per signal.
    #[arg(long, global = true, default_value_t = 60)]
    cycles: usize,
}

impl Shape {
    fn dims(self) -> Dims {
        Dims::new(self.phases, self.cycles)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a labeled synthetic corpus as dataset CSV.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples per class: corona,floating,particle,void.
        #[arg(long, default_value = "85,99,80,64", value_parser = parse_counts)]
        counts: [usize; 4],
        /// TOML file overriding the per-class generator profiles.
        #[arg(long)]
        profile_file: Option<PathBuf>,
    },
    /// Compute a feature matrix and write it as CSV.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "meta")]
        features: FeatureKind,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model on a labeled dataset and save it.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        /// lr, rf, svm, fsvm, gb or stack.
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "meta")]
        features: FeatureKind,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// TOML hyperparameter file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated train/validation splits; prints a table and writes a JSON report.
    Evaluate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated model names.
        #[arg(long, value_delimiter = ',', default_value = "lr,rf,gb,svm,fsvm,stack")]
        model: Vec<String>,
        /// Comma-separated feature sets.
        #[arg(long, value_delimiter = ',', default_value = "meta")]
        features: Vec<FeatureKind>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0.6)]
        train_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Predict labels and class probabilities with a saved model.
    Classify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render one sample as a binary PGM heatmap.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_counts(s: &str) -> Result<[usize; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected 4 comma-separated counts, got {}", parts.len()));
    }
    let mut counts = [0; 4];
    for (c, p) in counts.iter_mut().zip(parts) {
        *c = p.parse().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok(counts)
}

/// Bad flags or configuration detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<prpd_core::Error>() {
            return match e {
                e if e.is_numerical() => 4,
                prpd_core::Error::Config(_) | prpd_core::Error::InvalidThreshold(_) => 2,
                _ => 3,
            };
        }
    }
    3
}

/// Joins the error chain, skipping causes already spelled out by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, cli.shape.dims()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
