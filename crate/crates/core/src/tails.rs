//! Telling two power-law tails apart with a κ threshold.
//!
//! A threshold is calibrated on a sample from the heavier tail (index
//! `alpha1`). Each replication then pools `n` draws from each tail, finds the
//! first `m` with `R_m > κ` on the pooled sorted sample and records which
//! tail the observations above that split came from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kneedle::{kappa_from_sample, KappaChoice, KneedleConfig};
use crate::par::{map_indexed, Workers};
use crate::sample::{r_series, SortedSample};
use crate::sampler::{DistributionSpec, SeedPolicy};

/// Retries allowed when a calibration sample has no knee.
pub const CALIBRATION_ATTEMPTS: u64 = 5;

const CALIBRATION_TAG: u64 = 1;
const REPLICATION_TAG: u64 = 2;

/// Which power-law family the two tails are drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailFamily {
    /// `P(X > x) = (1 + x / x_min)^-alpha`, supported on `[0, ∞)`.
    #[default]
    Lomax,
    /// `P(X > x) = (x_min / x)^alpha`, supported on `[x_min, ∞)`.
    Pareto,
}

impl TailFamily {
    pub fn spec(self, alpha: f64, x_min: f64) -> DistributionSpec {
        match self {
            TailFamily::Lomax => DistributionSpec::Lomax { alpha, scale: x_min },
            TailFamily::Pareto => DistributionSpec::Pareto { alpha, x_min },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailExperimentConfig {
    /// Heavier tail index.
    pub alpha1: f64,
    /// Lighter tail index, above `alpha1`.
    pub alpha2: f64,
    pub x_min: f64,
    /// Draws per tail in each replication.
    pub n: usize,
    pub reps: usize,
    /// Fixed threshold; calibrated from an `alpha1` sample when absent.
    pub kappa: Option<f64>,
    pub calibration_n: usize,
    pub kneedle: KneedleConfig,
    pub family: TailFamily,
    /// Accept `alpha1 == alpha2`, which is useful as a symmetry check.
    pub allow_equal: bool,
    pub seed: SeedPolicy,
    #[serde(default)]
    pub workers: Workers,
}

impl TailExperimentConfig {
    pub fn new(alpha1: f64, alpha2: f64, n: usize, reps: usize, seed: SeedPolicy) -> Self {
        Self {
            alpha1,
            alpha2,
            x_min: 1.0,
            n,
            reps,
            kappa: None,
            calibration_n: 1000,
            kneedle: KneedleConfig::default(),
            family: TailFamily::Lomax,
            allow_equal: false,
            seed,
            workers: Workers::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2), ("x_min", self.x_min)] {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::BadConfig(format!("{name} must be positive, got {a}")));
            }
        }
        let ordered = self.alpha1 < self.alpha2 || (self.allow_equal && self.alpha1 == self.alpha2);
        if !ordered {
            return Err(Error::BadConfig(format!(
                "need alpha1 < alpha2, got {} and {}",
                self.alpha1, self.alpha2
            )));
        }
        if self.n < 2 {
            return Err(Error::TooShort { len: self.n, min: 2 });
        }
        if self.reps == 0 {
            return Err(Error::BadConfig("reps must be at least 1".into()));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::BadConfig(format!("kappa must be positive, got {k}")));
            }
        }
        self.kneedle.validate()
    }
}

/// Outcome of calibrating κ on a heavier-tail sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub kappa: f64,
    pub m_star: usize,
    /// 0-based attempt that produced a knee.
    pub attempt: u64,
}

/// Draw a sample of size `n` from the `alpha` tail and pick κ at its knee,
/// retrying on fresh streams up to [`CALIBRATION_ATTEMPTS`] times.
pub fn calibrate_threshold(
    family: TailFamily,
    alpha: f64,
    x_min: f64,
    n: usize,
    cfg: &KneedleConfig,
    seed: &SeedPolicy,
) -> Result<Calibration> {
    let spec = family.spec(alpha, x_min);
    let seed = seed.derive(CALIBRATION_TAG);
    for attempt in 0..CALIBRATION_ATTEMPTS {
        let raw = spec.sample(n, &mut seed.stream(attempt))?;
        match kappa_from_sample(&SortedSample::new(&raw)?, cfg) {
            Ok(KappaChoice { kappa, m_star }) => {
                return Ok(Calibration {
                    kappa,
                    m_star,
                    attempt,
                })
            }
            Err(Error::NotFound) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NotFound)
}

/// One replication of the pooled experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    /// First `m` with `R_m > κ`; `None` when no ratio exceeds κ.
    pub split: Option<usize>,
    /// Observations strictly above the split.
    pub above: usize,
    /// Share of the observations above the split drawn from the `alpha1` tail.
    pub alpha1_fraction: Option<f64>,
    /// Share drawn from the `alpha2` tail.
    pub alpha2_fraction: Option<f64>,
}

/// Mean and population variance over the replications that split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionSummary {
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

impl FractionSummary {
    fn from_values(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        let count = v.len();
        let mean = v.iter().sum::<f64>() / count as f64;
        let variance = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count as f64;
        Some(Self {
            mean,
            variance,
            count,
        })
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailExperimentResult {
    pub kappa_used: f64,
    pub calibration: Option<Calibration>,
    pub records: Vec<ReplicationRecord>,
    /// Replications where no ratio exceeded κ.
    pub no_split: usize,
    /// Heavier-tail share above the split.
    pub alpha1: Option<FractionSummary>,
    /// Lighter-tail share above the split.
    pub alpha2: Option<FractionSummary>,
}

pub fn run_tail_experiment(cfg: &TailExperimentConfig) -> Result<TailExperimentResult> {
    cfg.validate()?;
    let (kappa, calibration) = match cfg.kappa {
        Some(k) => (k, None),
        None => {
            let c = calibrate_threshold(
                cfg.family,
                cfg.alpha1,
                cfg.x_min,
                cfg.calibration_n,
                &cfg.kneedle,
                &cfg.seed,
            )?;
            (c.kappa, Some(c))
        }
    };
    let heavy = cfg.family.spec(cfg.alpha1, cfg.x_min);
    let light = cfg.family.spec(cfg.alpha2, cfg.x_min);
    let seed = cfg.seed.derive(REPLICATION_TAG);

    let records = map_indexed(cfg.reps, cfg.workers, |rep| -> Result<ReplicationRecord> {
        let mut rng = seed.stream(rep as u64);
        let mut raw = heavy.sample(cfg.n, &mut rng)?;
        raw.extend(light.sample(cfg.n, &mut rng)?);
        let mut from_light = vec![false; cfg.n];
        from_light.resize(2 * cfg.n, true);
        let (sample, from_light) = SortedSample::with_tags(&raw, &from_light)?;
        let split = r_series(&sample)?.first_exceedance(kappa);
        let (above, alpha2_fraction) = match split {
            Some(m) => {
                let above = sample.len() - m;
                let light = from_light[m..].iter().filter(|&&l| l).count();
                (above, Some(light as f64 / above as f64))
            }
            None => (0, None),
        };
        Ok(ReplicationRecord {
            rep,
            split,
            above,
            alpha1_fraction: alpha2_fraction.map(|f| 1.0 - f),
            alpha2_fraction,
        })
    });
    let records: Vec<ReplicationRecord> = records.into_iter().collect::<Result<_>>()?;

    let heavy_fracs: Vec<f64> = records.iter().filter_map(|r| r.alpha1_fraction).collect();
    let light_fracs: Vec<f64> = records.iter().filter_map(|r| r.alpha2_fraction).collect();
    Ok(TailExperimentResult {
        kappa_used: kappa,
        calibration,
        no_split: records.iter().filter(|r| r.split.is_none()).count(),
        alpha1: FractionSummary::from_values(&heavy_fracs),
        alpha2: FractionSummary::from_values(&light_fracs),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_is_deterministic_and_a_ratio() {
        let seed = SeedPolicy::new(31);
        let cfg = KneedleConfig::default();
        let a = calibrate_threshold(TailFamily::Lomax, 1.5, 1.0, 1000, &cfg, &seed).unwrap();
        let b = calibrate_threshold(TailFamily::Lomax, 1.5, 1.0, 1000, &cfg, &seed).unwrap();
        assert_eq!(a, b);
        assert!(a.kappa > 0.0);
        let raw = TailFamily::Lomax
            .spec(1.5, 1.0)
            .sample(1000, &mut seed.derive(CALIBRATION_TAG).stream(a.attempt))
            .unwrap();
        let series = r_series(&SortedSample::new(&raw).unwrap()).unwrap();
        assert_eq!(series.get(a.m_star), Some(a.kappa));
    }

    #[test]
    fn config_checks() {
        let seed = SeedPolicy::new(1);
        assert!(TailExperimentConfig::new(2.0, 1.5, 100, 1, seed).validate().is_err());
        let mut same = TailExperimentConfig::new(1.5, 1.5, 100, 1, seed);
        assert!(same.validate().is_err());
        same.allow_equal = true;
        assert!(same.validate().is_ok());
        let mut zero = TailExperimentConfig::new(1.5, 2.5, 100, 0, seed);
        assert!(zero.validate().is_err());
        zero.reps = 1;
        zero.kappa = Some(-1.0);
        assert!(zero.validate().is_err());
    }

    #[test]
    fn records_are_consistent() {
        let mut cfg = TailExperimentConfig::new(1.5, 2.5, 2000, 20, SeedPolicy::new(32));
        cfg.kappa = Some(2.745);
        let res = run_tail_experiment(&cfg).unwrap();
        assert_eq!(res.records.len(), 20);
        for r in &res.records {
            match r.split {
                Some(m) => {
                    assert_eq!(r.above, 4000 - m);
                    let (a, b) = (r.alpha1_fraction.unwrap(), r.alpha2_fraction.unwrap());
                    assert!((0.0..=1.0).contains(&a) && (a + b - 1.0).abs() < 1e-12);
                }
                None => assert!(r.alpha1_fraction.is_none()),
            }
        }
        let s = res.alpha1.unwrap();
        assert_eq!(s.count + res.no_split, 20);
        assert!(s.variance >= 0.0);
    }

    #[test]
    fn identical_tails_split_evenly() {
        let mut cfg = TailExperimentConfig::new(1.5, 1.5, 10_000, 100, SeedPolicy::new(33));
        cfg.allow_equal = true;
        cfg.kappa = Some(2.745);
        let res = run_tail_experiment(&cfg).unwrap();
        let m = res.alpha2.unwrap().mean;
        assert!((m - 0.5).abs() <= 0.02, "mean {m}");
    }

    #[test]
    fn worker_count_and_seed_determinism() {
        let mut cfg = TailExperimentConfig::new(1.5, 2.1, 3000, 16, SeedPolicy::new(34));
        cfg.workers = Workers::Fixed(1);
        let a = run_tail_experiment(&cfg).unwrap();
        cfg.workers = Workers::Fixed(3);
        let b = run_tail_experiment(&cfg).unwrap();
        cfg.workers = Workers::Auto;
        let c = run_tail_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(a.calibration.is_some());
    }

    #[test]
    fn classic_pareto_family_runs() {
        let mut cfg = TailExperimentConfig::new(1.5, 2.5, 1000, 4, SeedPolicy::new(35));
        cfg.family = TailFamily::Pareto;
        cfg.kappa = Some(2.745);
        let res = run_tail_experiment(&cfg).unwrap();
        assert_eq!(res.records.len(), 4);
    }
}
