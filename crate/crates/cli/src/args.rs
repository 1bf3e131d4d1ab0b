use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

const FRAME_FORMATS: &str = "\
Frame files are JSON objects {\"d\": int, \"N\": int, \"columns\": [[re, im, re, im, ...], ...]} \
with one array of 2d numbers per column. Files ending in .csv hold 2d rows and N columns, \
rows alternating the real and imaginary parts of each coordinate. RunRecord JSON written by \
`solve` is accepted wherever a frame file is.";

#[derive(Debug, Parser)]
#[command(name = "linepack", version, about = "Low-coherence line packings in complex space")]
#[command(after_help = FRAME_FORMATS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a low-coherence configuration of N lines in C^d.
    Solve(SolveArgs),
    /// Print coherence lower bounds for one N or a range of N.
    Bounds(BoundsArgs),
    /// Report bounds, certificates and conjectured targets for a frame file.
    #[command(after_help = FRAME_FORMATS)]
    Certify(CertifyArgs),
    /// Solve every N in a range and write per-N records plus a CSV summary.
    Sweep(SweepArgs),
    /// Monte Carlo MISO quantization distortion of a codebook.
    #[command(after_help = FRAME_FORMATS)]
    Distortion(DistortionArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Trstmi,
    Altproj,
}

/// Inclusive `a:b` range of N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NRange {
    pub start: usize,
    pub end: usize,
}

impl FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got {s:?}"))?;
        let start: usize = a.trim().parse().map_err(|e| format!("bad range start {a:?}: {e}"))?;
        let end: usize = b.trim().parse().map_err(|e| format!("bad range end {b:?}: {e}"))?;
        if start == 0 || end < start {
            return Err(format!("range must satisfy 1 <= a <= b, got {start}:{end}"));
        }
        Ok(NRange { start, end })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Independent random starts.
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Target accuracy of the smoothed maximum; sets the final smoothing level.
    #[arg(long, default_value_t = 1e-7)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Trstmi)]
    pub method: MethodArg,
    /// Worker threads for restarts (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Certificate tolerance recorded with each result.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Iteration budget for the alternating-projection baseline.
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long = "N")]
    pub n: usize,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Where to write the RunRecord JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long = "N", conflicts_with = "n_range", required_unless_present = "n_range")]
    pub n: Option<usize>,
    #[arg(long = "N-range")]
    pub n_range: Option<NRange>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long = "N-range")]
    pub n_range: NRange,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Output directory for run records and sweep.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DistortionArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Mean symbol energy.
    #[arg(long = "Es", default_value_t = 1.0)]
    pub es: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges() {
        assert_eq!("2:100".parse::<NRange>().unwrap(), NRange { start: 2, end: 100 });
        assert!("5:2".parse::<NRange>().is_err());
        assert!("0:3".parse::<NRange>().is_err());
        assert!("7".parse::<NRange>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
