use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use rstat::kneedle::CurveShape;
use rstat::tails::TailFamily;
use rstat::DistributionSpec;

pub const SPEC_GRAMMAR: &str = "expected one of: exp:theta=1, halfnormal, pareto:alpha=1.5,xmin=1, \
     lomax:alpha=1.5,scale=1, ident:n=1000,k=100,theta=1,b=3";

#[derive(Debug, Parser)]
#[command(name = "rstat", version, about = "Order-statistic ratio outlier toolkit", long_about = None)]
pub struct Cli {
    /// Root seed for every random stream
    #[arg(long, global = true, env = "RSTAT_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for replications; 0 uses every core
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    /// Where to write the run manifest (defaults next to the outputs)
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Flag the upper block of a sample whose ratio exceeds κ
    Detect(DetectArgs),
    /// Monte Carlo distribution of R_m
    Simulate(SimulateArgs),
    /// Exact P(R < κ) and its bracket for an i.i.d. parent
    Exact(ExactArgs),
    /// Knee of a two-column x,y curve
    Knee(KneeArgs),
    /// Two power-law tails pooled and split at κ
    Pareto(ParetoArgs),
    /// Re-run the command recorded in a manifest
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Detect(_) => "detect",
            Command::Simulate(_) => "simulate",
            Command::Exact(_) => "exact",
            Command::Knee(_) => "knee",
            Command::Pareto(_) => "pareto",
            Command::Replay(_) => "replay",
        }
    }
}

/// A fixed threshold or `auto` for knee-based calibration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum KappaArg {
    Auto,
    Value(f64),
}

impl KappaArg {
    pub fn fixed(self) -> Option<f64> {
        match self {
            KappaArg::Auto => None,
            KappaArg::Value(k) => Some(k),
        }
    }
}

impl FromStr for KappaArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(KappaArg::Auto);
        }
        let k: f64 = s.parse().map_err(|_| anyhow!("kappa must be a number or 'auto', got {s:?}"))?;
        if !k.is_finite() {
            bail!("kappa must be finite, got {s}");
        }
        Ok(KappaArg::Value(k))
    }
}

impl fmt::Display for KappaArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaArg::Auto => f.write_str("auto"),
            KappaArg::Value(k) => write!(f, "{k}"),
        }
    }
}

impl From<KappaArg> for String {
    fn from(k: KappaArg) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for KappaArg {
    type Error = anyhow::Error;

    fn try_from(s: String) -> anyhow::Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeArg {
    IncreasingConvex,
    IncreasingConcave,
    DecreasingConvex,
    DecreasingConcave,
}

impl From<ShapeArg> for CurveShape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::IncreasingConvex => CurveShape::IncreasingConvex,
            ShapeArg::IncreasingConcave => CurveShape::IncreasingConcave,
            ShapeArg::DecreasingConvex => CurveShape::DecreasingConvex,
            ShapeArg::DecreasingConcave => CurveShape::DecreasingConcave,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    /// Power law shifted to start at zero
    Lomax,
    /// Classic Pareto supported on [xmin, ∞)
    Pareto,
}

impl From<FamilyArg> for TailFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Lomax => TailFamily::Lomax,
            FamilyArg::Pareto => TailFamily::Pareto,
        }
    }
}

/// Parent law for exact evaluation: `exp:theta=1`, `halfnormal` or `uniform:width=1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ParentArg {
    Exponential { theta: f64 },
    HalfNormal,
    Uniform { width: f64 },
}

impl FromStr for ParentArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("uniform") {
            let width = match rest {
                "" => 1.0,
                _ => rest
                    .strip_prefix(":width=")
                    .and_then(|w| w.parse::<f64>().ok())
                    .filter(|w| *w > 0.0 && w.is_finite())
                    .ok_or_else(|| anyhow!("bad parent {s:?}: expected uniform:width=<positive>"))?,
            };
            return Ok(ParentArg::Uniform { width });
        }
        match s.parse::<DistributionSpec>() {
            Ok(DistributionSpec::Exponential { theta }) => Ok(ParentArg::Exponential { theta }),
            Ok(DistributionSpec::HalfNormal) => Ok(ParentArg::HalfNormal),
            _ => bail!("bad parent {s:?}: expected one of exp:theta=1, halfnormal, uniform:width=1"),
        }
    }
}

impl fmt::Display for ParentArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParentArg::Exponential { theta } => write!(f, "exp:theta={theta}"),
            ParentArg::HalfNormal => f.write_str("halfnormal"),
            ParentArg::Uniform { width } => write!(f, "uniform:width={width}"),
        }
    }
}

impl From<ParentArg> for String {
    fn from(p: ParentArg) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for ParentArg {
    type Error = anyhow::Error;

    fn try_from(s: String) -> anyhow::Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    /// One value per line; '#' starts a comment
    pub input: PathBuf,
    /// Threshold on R_m, or 'auto' to pick it at the knee of the ratio curve
    #[arg(long, default_value = "auto")]
    pub kappa: KappaArg,
    /// Knee sensitivity used with --kappa auto
    #[arg(long, default_value_t = 5.0)]
    pub sensitivity: f64,
    /// Report path (stdout when absent)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Sampling law, e.g. exp:theta=1
    #[arg(long)]
    pub dist: String,
    /// Sample size; defaults to the n of an ident spec, else 1000
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Split points at which R_m is recorded
    #[arg(long, value_delimiter = ',', default_values_t = [50usize, 500, 950])]
    pub m: Vec<usize>,
    /// Percentile levels in (0, 100]
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 50.0, 95.0])]
    pub percentiles: Vec<f64>,
    /// Raw R_m curves to write, one file per sample
    #[arg(long, default_value_t = 0)]
    pub curves: usize,
    /// Output directory
    #[arg(long, default_value = "simulate-out")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub kappa: f64,
    /// Parent law: exp:theta=1, halfnormal or uniform:width=1
    #[arg(long, default_value = "exp:theta=1")]
    pub parent: ParentArg,
    /// Cells per grid inside the outer integral
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Absolute tolerance of the outer integral
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct KneeArgs {
    /// Two numeric columns x,y per line
    pub input: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    pub sensitivity: f64,
    /// Odd moving-average window; 1 disables smoothing
    #[arg(long, default_value_t = 1)]
    pub smoothing: usize,
    #[arg(long, value_enum, default_value_t = ShapeArg::IncreasingConvex)]
    pub shape: ShapeArg,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ParetoArgs {
    /// Heavier tail index
    #[arg(long)]
    pub alpha1: f64,
    /// Lighter tail index
    #[arg(long)]
    pub alpha2: f64,
    /// Draws per tail
    #[arg(long = "n", default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value = "auto")]
    pub kappa: KappaArg,
    /// Sample size for calibrating κ with --kappa auto
    #[arg(long, default_value_t = 1000)]
    pub calibration_n: usize,
    #[arg(long, default_value_t = 5.0)]
    pub sensitivity: f64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Lomax)]
    pub family: FamilyArg,
    /// Scale of the tails (x_min for pareto)
    #[arg(long, default_value_t = 1.0)]
    pub xmin: f64,
    /// Accept alpha1 == alpha2
    #[arg(long)]
    pub allow_equal: bool,
    /// Omit per-replication records
    #[arg(long)]
    pub summary_only: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run
    pub manifest: PathBuf,
}
