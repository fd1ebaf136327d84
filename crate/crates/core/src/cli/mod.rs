//! The `sqzphase` experiment harness.
//!
//! Every subcommand resolves its parameters with precedence flag > config
//! file > default, writes CSV, JSON and SVG artifacts atomically into
//! `--out`, and stamps each CSV with the resolved parameters, the seed and
//! the artifact version. Output depends only on the resolved parameters.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or invalid parameter,
//! 3 non-finite result.

mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::run;
pub use output::ARTIFACT_VERSION;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("non-finite result: {0}")]
    NonFinite(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(crate::Error::NonFinite(_)) | CliError::NonFinite(_) => 3,
            CliError::Model(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sqzphase",
    version,
    about = "Squeezed-vacuum homodyne phase estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Base seed for all random streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overall detection efficiency in (0, 1].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Flat `key = value` file; keys match the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sensitivity limits of all schemes versus photon number.
    Limits(LimitsArgs),
    /// Monte Carlo estimator variance versus the true phase.
    SweepPhase(SweepPhaseArgs),
    /// Monte Carlo sensitivity at the optimal phase versus photon number.
    SweepPhotons(SweepPhotonsArgs),
    /// One batch: sample (or import), posterior and MAP estimate.
    Estimate(EstimateArgs),
    /// Track a time-varying phase and analyse its spectrum.
    Track(TrackArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct LimitsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Photon grid: `a,b,c`, `lo:hi:count` or `lo:hi:count:log`.
    #[arg(long)]
    pub photons: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepPhaseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Mean photon numbers to sweep.
    #[arg(long)]
    pub photons: Option<String>,
    /// True phases in [0, pi/2].
    #[arg(long)]
    pub phases: Option<String>,
    /// Samples per estimate.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Posterior grid points used for the width column.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// RMS phase jitter per sample (rad).
    #[arg(long)]
    pub jitter: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepPhotonsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub photons: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub jitter: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Mean photon number of the probe.
    #[arg(long)]
    pub photons: Option<f64>,
    /// Squeezing parameter; overrides `--photons`.
    #[arg(long)]
    pub r: Option<f64>,
    /// True phase; defaults to the optimal phase.
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Sample counts at which the streaming posterior is recorded.
    #[arg(long)]
    pub checkpoints: Option<String>,
    /// Import samples from an `index,x` CSV instead of sampling.
    #[arg(long)]
    pub input: Option<String>,
    /// JSON sidecar for `--input`; defaults to the input path with `.json`.
    #[arg(long)]
    pub meta: Option<String>,
    #[arg(long)]
    pub jitter: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrackArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub photons: Option<f64>,
    /// Homodyne sample rate (Hz).
    #[arg(long)]
    pub fs: Option<f64>,
    /// Samples per estimation window.
    #[arg(long)]
    pub window: Option<usize>,
    /// Record length (s).
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub tone_freq: Option<f64>,
    /// Tone amplitude (rad).
    #[arg(long)]
    pub tone_amp: Option<f64>,
    /// RMS of the low-frequency drift (rad); 0 disables it.
    #[arg(long)]
    pub noise_rms: Option<f64>,
    #[arg(long)]
    pub noise_corner: Option<f64>,
    #[arg(long)]
    pub band_lo: Option<f64>,
    #[arg(long)]
    pub band_hi: Option<f64>,
    #[arg(long)]
    pub jitter: Option<f64>,
}

/// Parses `args` (including the program name) and runs the command without
/// printing anything. Returns the written artifact paths.
pub fn try_main<I, T>(args: I) -> Result<Vec<PathBuf>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(&cli.command)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Written paths go to stdout, diagnostics to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Model(crate::Error::DegenerateVariances).exit_code(),
            2
        );
        assert_eq!(CliError::Model(crate::Error::NonFinite("x")).exit_code(), 3);
        assert_eq!(CliError::NonFinite("x".into()).exit_code(), 3);
    }

    #[test]
    fn help_and_bad_flags() {
        assert_eq!(main_with_args(["sqzphase", "--help"]), 0);
        assert_eq!(main_with_args(["sqzphase", "limits", "--eta", "abc"]), 2);
        assert_eq!(main_with_args(["sqzphase", "nope"]), 2);
    }
}
