use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use serde::Serialize;

use rstat::exact::{
    prob_r_less_kappa_with, sandwich_bounds_with, Exponential, ExactOptions, HalfNormal, ParentModel,
    Uniform,
};
use rstat::harness::{r_curve, run_r_distribution, SimConfig};
use rstat::kneedle::{detect_knee, kappa_from_sample, Curve, KneedleConfig};
use rstat::sample::detect_outliers;
use rstat::tails::{run_tail_experiment, Calibration, FractionSummary, ReplicationRecord, TailExperimentConfig};
use rstat::{DistributionSpec, Error, SeedPolicy, SortedSample, Workers};

use crate::args::{DetectArgs, ExactArgs, KappaArg, KneeArgs, ParentArg, ParetoArgs, SimulateArgs, SPEC_GRAMMAR};
use crate::io::{read_curve, read_values, sidecar, write_csv, Records};

/// What a finished command leaves behind.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Default manifest path, beside the outputs; `None` for stdout runs.
    pub manifest: Option<PathBuf>,
    /// The run completed but found nothing, which exits with status 2.
    pub not_found: bool,
}

impl Outcome {
    fn beside(output: Option<&Path>) -> Self {
        Self {
            manifest: output.map(sidecar),
            not_found: false,
        }
    }
}

/// Settings shared by every subcommand.
#[derive(Clone, Copy, Debug)]
pub struct Context {
    pub seed: u64,
    pub workers: Workers,
}

#[derive(Serialize)]
struct Flagged {
    /// 1-based position in ascending order.
    rank: usize,
    value: f64,
}

#[derive(Serialize)]
struct DetectRecord {
    n: usize,
    kappa: f64,
    kappa_source: &'static str,
    /// Knee of the ratio curve when κ was chosen automatically.
    knee_m: Option<usize>,
    m_star: usize,
    exceeded: bool,
    o_n: Option<usize>,
    outliers: Vec<Flagged>,
}

pub fn detect(a: &DetectArgs) -> Result<Outcome> {
    let raw = read_values(&a.input)?;
    let sample = SortedSample::new(&raw)?;
    let (kappa, knee_m) = match a.kappa {
        KappaArg::Value(k) => (k, None),
        KappaArg::Auto => {
            let cfg = KneedleConfig {
                sensitivity: a.sensitivity,
                ..KneedleConfig::default()
            };
            let choice = kappa_from_sample(&sample, &cfg)?;
            (choice.kappa, Some(choice.m_star))
        }
    };
    let report = detect_outliers(&sample, kappa)?;
    let values = sample.values();
    let record = DetectRecord {
        n: sample.len(),
        kappa,
        kappa_source: if knee_m.is_some() { "auto" } else { "fixed" },
        knee_m,
        m_star: report.m_star,
        exceeded: report.exceeded,
        o_n: report.o_n,
        outliers: report
            .outlier_indices
            .iter()
            .map(|&rank| Flagged {
                rank,
                value: values[rank - 1],
            })
            .collect(),
    };
    let mut out = Records::open(a.output.as_deref())?;
    out.write(&record)?;
    out.finish()?;
    Ok(Outcome::beside(a.output.as_deref()))
}

pub fn parse_spec(s: &str) -> Result<DistributionSpec> {
    s.parse().map_err(|e: Error| anyhow!("{e}; {SPEC_GRAMMAR}"))
}

/// Sample size of a simulate run when `--n` is absent.
pub fn default_n(spec: &DistributionSpec) -> usize {
    match spec {
        DistributionSpec::IdentifiedOutliers { n, .. } => *n,
        _ => 1000,
    }
}

pub fn simulate(a: &SimulateArgs, ctx: Context) -> Result<Outcome> {
    let spec = parse_spec(&a.dist)?;
    let n = a.n.unwrap_or_else(|| default_n(&spec));
    let seed = SeedPolicy::new(ctx.seed);
    let mut cfg = SimConfig::new(spec, n, a.m.clone(), a.reps, seed);
    cfg.percentiles = a.percentiles.clone();
    cfg.workers = ctx.workers;
    let summary = run_r_distribution(&cfg)?;

    write_csv(
        &a.out.join("percentiles.csv"),
        &["m", "level", "value"],
        summary.per_m.iter().flat_map(|s| {
            s.percentiles
                .iter()
                .map(move |p| vec![s.m.to_string(), p.level.to_string(), p.value.to_string()])
        }),
    )?;
    write_csv(
        &a.out.join("histograms.csv"),
        &["m", "bin_lo", "bin_hi", "count"],
        summary.per_m.iter().flat_map(|s| {
            s.histogram
                .bins()
                .map(move |(lo, hi, c)| vec![s.m.to_string(), lo.to_string(), hi.to_string(), c.to_string()])
        }),
    )?;
    let mut out = Records::open(Some(&a.out.join("summary.jsonl")))?;
    for s in &summary.per_m {
        out.write(s)?;
    }
    out.finish()?;

    // curves use their own streams so they do not depend on `reps`
    let curve_seed = seed.derive(0xC0);
    for r in 0..a.curves {
        let c = r_curve(&spec, n, &curve_seed, r as u64)?;
        write_csv(
            &a.out.join(format!("curve_{r}.csv")),
            &["m", "r_m", "x_m", "contaminant"],
            c.series.points().map(|(m, r_m)| {
                vec![
                    m.to_string(),
                    r_m.to_string(),
                    c.sorted[m - 1].to_string(),
                    c.contaminant[m - 1].to_string(),
                ]
            }),
        )?;
    }
    Ok(Outcome {
        manifest: Some(a.out.join("manifest.json")),
        not_found: false,
    })
}

#[derive(Serialize)]
struct ExactRecord {
    n: usize,
    m: usize,
    kappa: f64,
    parent: String,
    /// `P(S_{m-1} / T_{n-m} < κ)`.
    point: f64,
    /// Bracket on `P(S_m / T_{n-m} <= κ)`; absent for `m = 1`.
    lower: Option<f64>,
    upper: Option<f64>,
}

fn exact_with<M: ParentModel>(model: &M, a: &ExactArgs) -> Result<ExactRecord> {
    let opts = ExactOptions {
        outer_grid_intervals: a.grid,
        outer_abs_tol: a.tol,
        ..ExactOptions::default()
    };
    let point = prob_r_less_kappa_with(model, a.n, a.m, a.kappa, &opts)?;
    let bounds = if a.m >= 2 {
        Some(sandwich_bounds_with(model, a.n, a.m, a.kappa, &opts)?)
    } else {
        None
    };
    Ok(ExactRecord {
        n: a.n,
        m: a.m,
        kappa: a.kappa,
        parent: model.name(),
        point,
        lower: bounds.map(|b| b.lower),
        upper: bounds.map(|b| b.upper),
    })
}

pub fn exact(a: &ExactArgs) -> Result<Outcome> {
    if !a.kappa.is_finite() {
        return Err(Error::NonFinite { index: 0 }.into());
    }
    let record = match a.parent {
        ParentArg::Exponential { theta } => exact_with(&Exponential::new(theta)?, a)?,
        ParentArg::HalfNormal => exact_with(&HalfNormal, a)?,
        ParentArg::Uniform { width } => exact_with(&Uniform { width }, a)?,
    };
    let mut out = Records::open(a.output.as_deref())?;
    out.write(&record)?;
    out.finish()?;
    Ok(Outcome::beside(a.output.as_deref()))
}

/// A curve without a knee still gets its record, flagged as not found.
pub fn knee(a: &KneeArgs) -> Result<Outcome> {
    let (x, y) = read_curve(&a.input)?;
    let curve = Curve::new(x, y)?;
    let cfg = KneedleConfig {
        sensitivity: a.sensitivity,
        smoothing_window: a.smoothing,
        shape: a.shape.into(),
    };
    let result = detect_knee(&curve, &cfg)?;
    let mut out = Records::open(a.output.as_deref())?;
    out.write(&result)?;
    out.finish()?;
    Ok(Outcome {
        not_found: !result.found,
        ..Outcome::beside(a.output.as_deref())
    })
}

#[derive(Serialize)]
struct ReplicationLine<'a> {
    record: &'static str,
    #[serde(flatten)]
    rep: &'a ReplicationRecord,
}

#[derive(Serialize)]
struct AggregateLine {
    record: &'static str,
    alpha1: f64,
    alpha2: f64,
    n: usize,
    reps: usize,
    kappa: f64,
    calibration: Option<Calibration>,
    no_split: usize,
    /// Mean and variance of the heavier-tail share above the split.
    heavier_fraction: Option<FractionSummary>,
    lighter_fraction: Option<FractionSummary>,
}

pub fn pareto(a: &ParetoArgs, ctx: Context) -> Result<Outcome> {
    let mut cfg = TailExperimentConfig::new(a.alpha1, a.alpha2, a.n, a.reps, SeedPolicy::new(ctx.seed));
    cfg.kappa = a.kappa.fixed();
    cfg.calibration_n = a.calibration_n;
    cfg.kneedle.sensitivity = a.sensitivity;
    cfg.family = a.family.into();
    cfg.x_min = a.xmin;
    cfg.allow_equal = a.allow_equal;
    cfg.workers = ctx.workers;
    let result = run_tail_experiment(&cfg)?;

    let mut out = Records::open(a.output.as_deref())?;
    if !a.summary_only {
        for rep in &result.records {
            out.write(&ReplicationLine {
                record: "replication",
                rep,
            })?;
        }
    }
    out.write(&AggregateLine {
        record: "aggregate",
        alpha1: a.alpha1,
        alpha2: a.alpha2,
        n: a.n,
        reps: a.reps,
        kappa: result.kappa_used,
        calibration: result.calibration,
        no_split: result.no_split,
        heavier_fraction: result.alpha1,
        lighter_fraction: result.alpha2,
    })?;
    out.finish()?;
    Ok(Outcome::beside(a.output.as_deref()))
}
