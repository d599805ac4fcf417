//! `misslevel`: simulate crossover ensembles, measure spectral statistics,
//! tabulate the missing-level theory and fit Φ and ξ.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod grid;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grid::{Grid, Range};
use misslevel::theory::TheoryCurve;
use misslevel::Unfolding;
use serde::Serialize;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "misslevel",
    version,
    about = "Spectral statistics of incomplete spectra with partial time-reversal violation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sample crossover random matrices and write one unfolded level file per realization.
    Simulate(SimulateArgs),
    /// Measure spacing distribution, number variance, rigidity and power spectrum.
    Analyze(AnalyzeArgs),
    /// Tabulate a theory curve.
    Theory(TheoryArgs),
    /// Fit the next-nearest-neighbour spacing model used by the spacing law at Φ < 1.
    BuildModel(BuildModelArgs),
    /// Estimate Φ from a power spectrum or ξ from a number variance.
    #[command(subcommand)]
    Fit(FitCommand),
    /// Unfold a measured level list with Weyl's law or a polynomial.
    Unfold(UnfoldArgs),
    /// Cross-correlation coefficient of S12 and S21 per frequency window.
    Crosscorr(CrosscorrArgs),
    /// Re-run the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Matrix dimension.
    #[arg(long)]
    pub n: usize,
    /// Number of realizations.
    #[arg(long)]
    pub count: usize,
    /// Time-reversal violation in units of the mean spacing.
    #[arg(long)]
    pub xi: f64,
    /// Fraction of levels kept.
    #[arg(long, default_value_t = 1.0)]
    pub phi: f64,
    #[arg(long)]
    pub seed: u64,
    /// Central fraction of eigenvalues kept.
    #[arg(long, default_value_t = misslevel::rmt::DEFAULT_BULK_FRACTION)]
    pub bulk: f64,
    /// `poly:DEGREE` or `semicircle`.
    #[arg(long, default_value = "poly:3", value_parser = parse_unfolding)]
    pub unfolding: Unfolding,
    #[arg(long, default_value = "levels")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stat {
    Nn,
    Sigma2,
    Delta3,
    Power,
}

impl fmt::Display for Stat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stat::Nn => "nn",
            Stat::Sigma2 => "sigma2",
            Stat::Delta3 => "delta3",
            Stat::Power => "power",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    /// Eigenfrequencies in GHz.
    Ghz,
    /// Raw eigenvalues in arbitrary units.
    Raw,
    /// Already unfolded to unit mean spacing.
    Unfolded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Subtract the segment's own linear trend from δ_q.
    Detrended,
    /// δ_q = ε_{q+1} − ε_1 − q unchanged.
    Literal,
}

/// Common spectrum length for the power spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NCommon {
    Auto,
    Fixed(usize),
}

fn parse_ncommon(s: &str) -> Result<NCommon, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(NCommon::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n >= 4 => Ok(NCommon::Fixed(n)),
        _ => Err(format!("expected AUTO or an integer >= 4, got '{s}'")),
    }
}

fn parse_unfolding(s: &str) -> Result<Unfolding, String> {
    if s == "semicircle" {
        return Ok(Unfolding::Semicircle);
    }
    s.strip_prefix("poly:")
        .and_then(|d| d.parse().ok())
        .map(|degree| Unfolding::Polynomial { degree })
        .ok_or_else(|| format!("expected poly:DEGREE or semicircle, got '{s}'"))
}

fn parse_curve(s: &str) -> Result<TheoryCurve, String> {
    s.parse().map_err(|e: misslevel::Error| e.to_string())
}

/// Billiard geometry for Weyl unfolding; lengths in metres.
#[derive(Debug, Args, Serialize)]
pub struct GeometryArgs {
    /// Billiard area in m².
    #[arg(long)]
    pub area: Option<f64>,
    /// Billiard perimeter in m.
    #[arg(long)]
    pub perimeter: Option<f64>,
    /// Sign of the perimeter term.
    #[arg(long, value_enum, default_value_t = Sign::Minus)]
    pub sign: Sign,
    /// Choose the Weyl constant so the lowest level maps to 1/2.
    #[arg(long)]
    pub calibrate: bool,
    /// Unfold with a least-squares polynomial of this degree instead.
    #[arg(long)]
    pub poly: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Glob of level files.
    #[arg(long = "in")]
    pub input: String,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "nn,sigma2,delta3,power"
    )]
    pub stats: Vec<Stat>,
    /// Histogram bin width of the spacing distribution.
    #[arg(long, default_value_t = misslevel::estimators::DEFAULT_BIN_WIDTH)]
    pub nn_bin: f64,
    /// Window lengths for number variance and rigidity.
    #[arg(long, default_value = "0.5:10:0.25")]
    pub lgrid: Grid,
    /// Levels per spectrum entering the power spectrum.
    #[arg(long, default_value = "AUTO", value_parser = parse_ncommon)]
    pub ncommon: NCommon,
    #[arg(long, value_enum, default_value_t = Convention::Detrended)]
    pub convention: Convention,
    /// Unit of the level files.
    #[arg(long, value_enum, default_value_t = Unit::Unfolded)]
    pub unit: Unit,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, default_value = "analysis")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Previously built model (JSON); otherwise one is simulated.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub model_n: usize,
    #[arg(long, default_value_t = 500)]
    pub model_count: usize,
    #[arg(long, default_value_t = 1)]
    pub model_seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TheoryArgs {
    #[arg(long)]
    pub xi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub phi: f64,
    /// One of ps, sigma2, delta3, power, y2, K.
    #[arg(long, value_parser = parse_curve)]
    #[serde(serialize_with = "display")]
    pub curve: TheoryCurve,
    #[arg(long)]
    pub grid: Grid,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output CSV; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn display<T: fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Args, Serialize)]
pub struct BuildModelArgs {
    #[arg(long)]
    pub xi: f64,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitCommand {
    /// Φ from a power-spectrum CSV at known ξ.
    Phi {
        #[arg(long)]
        power: PathBuf,
        #[arg(long)]
        xi: f64,
        /// Fit window in t.
        #[arg(long, default_value = "0.02:0.3")]
        window: Range,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ξ from a number-variance CSV at known Φ.
    Xi {
        #[arg(long)]
        sigma2: PathBuf,
        #[arg(long)]
        phi: f64,
        /// Fit range in L.
        #[arg(long, default_value = "0.5:5")]
        lrange: Range,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct UnfoldArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Unit::Ghz)]
    pub unit: Unit,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Output level file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CrosscorrArgs {
    /// CSV with columns freq_ghz,re_s12,im_s12,re_s21,im_s21.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Window width in GHz.
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Bad flags or flag combinations; exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    match commands::run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
