//! Monte Carlo summaries of `R_m` over many replications, and single-sample
//! R-curves with contaminant labels.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_indexed, Workers};
use crate::sample::{r_series, r_statistic, RatioSeries, SortedSample};
use crate::sampler::{DistributionSpec, SeedPolicy};

/// Fallback bin count when the interquartile range is zero or undefined.
pub const FALLBACK_BINS: usize = 64;
/// Upper limit on the number of histogram bins.
pub const MAX_BINS: usize = 4096;

/// Anything that can produce a labelled raw sample from a stream.
pub trait SampleSource: Sync {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<bool>)>;
}

impl SampleSource for DistributionSpec {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Vec<bool>)> {
        self.sample_labelled(n, rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub spec: DistributionSpec,
    pub n: usize,
    pub m_list: Vec<usize>,
    pub reps: usize,
    /// Percentile levels in `(0, 100]`.
    pub percentiles: Vec<f64>,
    pub seed: SeedPolicy,
    #[serde(default)]
    pub workers: Workers,
}

impl SimConfig {
    pub fn new(spec: DistributionSpec, n: usize, m_list: Vec<usize>, reps: usize, seed: SeedPolicy) -> Self {
        Self {
            spec,
            n,
            m_list,
            reps,
            percentiles: vec![5.0, 50.0, 95.0],
            seed,
            workers: Workers::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooShort { len: self.n, min: 2 });
        }
        if self.reps == 0 {
            return Err(Error::BadConfig("reps must be at least 1".into()));
        }
        if self.m_list.is_empty() {
            return Err(Error::BadConfig("no m values requested".into()));
        }
        if let Some(&m) = self.m_list.iter().find(|&&m| m == 0 || m >= self.n) {
            return Err(Error::IndexOutOfRange {
                index: m,
                lo: 1,
                hi: self.n - 1,
            });
        }
        if let Some(&p) = self.percentiles.iter().find(|&&p| !(p > 0.0 && p <= 100.0)) {
            return Err(Error::BadConfig(format!("percentile {p} outside (0, 100]")));
        }
        Ok(())
    }
}

/// Equal-width histogram starting at `lo`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Freedman–Diaconis bin width `2 IQR / N^(1/3)`, falling back to
    /// [`FALLBACK_BINS`] bins when the IQR vanishes. `sorted` must be
    /// ascending and nonempty.
    pub fn freedman_diaconis(sorted: &[f64]) -> Histogram {
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        let range = hi - lo;
        if !(range > 0.0) {
            return Histogram {
                lo,
                width: 0.0,
                counts: vec![sorted.len() as u64],
            };
        }
        let iqr = nearest_rank(sorted, 75.0) - nearest_rank(sorted, 25.0);
        let bins = if iqr > 0.0 && iqr.is_finite() {
            let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
            ((range / width).ceil() as usize).clamp(1, MAX_BINS)
        } else {
            FALLBACK_BINS
        };
        let width = range / bins as f64;
        let mut counts = vec![0u64; bins];
        for &v in sorted {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Histogram { lo, width, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(left edge, right edge, count)` per bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts.iter().enumerate().map(move |(i, &c)| {
            let left = self.lo + i as f64 * self.width;
            (left, left + self.width, c)
        })
    }
}

/// Nearest-rank percentile: the value at rank `ceil(p / 100 * N)` of an
/// ascending slice.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercentileValue {
    pub level: f64,
    pub value: f64,
}

/// Distribution of `R_m` across replications for one `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MSummary {
    pub m: usize,
    pub mean: f64,
    pub percentiles: Vec<PercentileValue>,
    pub histogram: Histogram,
}

impl MSummary {
    pub fn percentile(&self, level: f64) -> Option<f64> {
        self.percentiles
            .iter()
            .find(|p| p.level == level)
            .map(|p| p.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub n: usize,
    pub reps: usize,
    pub per_m: Vec<MSummary>,
}

impl SimSummary {
    pub fn get(&self, m: usize) -> Option<&MSummary> {
        self.per_m.iter().find(|s| s.m == m)
    }
}

/// Sample, sort and evaluate `R_m` at every requested `m`, once per replication.
pub fn run_r_distribution(cfg: &SimConfig) -> Result<SimSummary> {
    cfg.spec.validate()?;
    run_r_distribution_from(&cfg.spec, cfg)
}

/// [`run_r_distribution`] with the samples drawn from `source` instead of `cfg.spec`.
pub fn run_r_distribution_from<S: SampleSource + ?Sized>(source: &S, cfg: &SimConfig) -> Result<SimSummary> {
    cfg.validate()?;
    let rows = map_indexed(cfg.reps, cfg.workers, |r| -> Result<Vec<f64>> {
        let mut rng = cfg.seed.stream(r as u64);
        let (raw, _) = source.draw(cfg.n, &mut rng)?;
        let s = SortedSample::new(&raw)?;
        cfg.m_list.iter().map(|&m| r_statistic(&s, m)).collect()
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;

    let per_m = cfg
        .m_list
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let mut column: Vec<f64> = rows.iter().map(|row| row[j]).collect();
            column.sort_by(f64::total_cmp);
            let mean = column.iter().sum::<f64>() / column.len() as f64;
            MSummary {
                m,
                mean,
                percentiles: cfg
                    .percentiles
                    .iter()
                    .map(|&level| PercentileValue {
                        level,
                        value: nearest_rank(&column, level),
                    })
                    .collect(),
                histogram: Histogram::freedman_diaconis(&column),
            }
        })
        .collect();
    Ok(SimSummary {
        n: cfg.n,
        reps: cfg.reps,
        per_m,
    })
}

/// A single sample's R-curve with the origin of each sorted value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelledCurve {
    pub series: RatioSeries,
    pub sorted: Vec<f64>,
    /// `contaminant[i]` tells whether the `i`-th smallest value is a contaminant draw.
    pub contaminant: Vec<bool>,
}

impl LabelledCurve {
    /// Fraction of contaminant draws among the `k` largest values.
    pub fn contaminant_share_top(&self, k: usize) -> f64 {
        let k = k.min(self.contaminant.len());
        if k == 0 {
            return 0.0;
        }
        let hits = self.contaminant[self.contaminant.len() - k..]
            .iter()
            .filter(|&&c| c)
            .count();
        hits as f64 / k as f64
    }
}

/// The full curve `R_1..R_{n-1}` of the sample drawn on stream `r`.
pub fn r_curve<S: SampleSource + ?Sized>(source: &S, n: usize, seed: &SeedPolicy, r: u64) -> Result<LabelledCurve> {
    if n < 2 {
        return Err(Error::TooShort { len: n, min: 2 });
    }
    let (raw, labels) = source.draw(n, &mut seed.stream(r))?;
    let (sample, contaminant) = SortedSample::with_tags(&raw, &labels)?;
    Ok(LabelledCurve {
        series: r_series(&sample)?,
        sorted: sample.values().to_vec(),
        contaminant,
    })
}

/// Mean discrete slope `(R_{n-1} - R_{n-1-w}) / w` over the last `w` steps of a curve.
pub fn tail_slope(series: &RatioSeries, window: usize) -> Option<f64> {
    let len = series.r.len();
    if window == 0 || window >= len {
        return None;
    }
    Some((series.r[len - 1] - series.r[len - 1 - window]) / window as f64)
}
