//! Seedable samplers for the parent and contamination models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sampling model.
///
/// The textual form accepted by [`FromStr`] and produced by [`Display`](fmt::Display) is
/// `exp:theta=1`, `halfnormal`, `pareto:alpha=1.5,xmin=1`,
/// `lomax:alpha=1.5,scale=1` or `ident:n=1000,k=100,theta=1,b=3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Exponential with mean `theta`.
    Exponential { theta: f64 },
    /// `|Z|` for standard normal `Z`.
    HalfNormal,
    /// Classic Pareto on `[x_min, ∞)`: `P(X > x) = (x_min / x)^alpha`.
    Pareto { alpha: f64, x_min: f64 },
    /// Pareto shifted to start at zero: `P(X > x) = (1 + x / scale)^-alpha`.
    Lomax { alpha: f64, scale: f64 },
    /// `n - k` draws from Exponential(theta) followed by `k` contaminants
    /// from Exponential(b * theta).
    IdentifiedOutliers {
        n: usize,
        k: usize,
        theta: f64,
        b: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::BadSpec(format!("{name} must be positive and finite, got {v}")))
    }
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Exponential { theta } => positive("theta", theta),
            DistributionSpec::HalfNormal => Ok(()),
            DistributionSpec::Pareto { alpha, x_min } => {
                positive("alpha", alpha)?;
                positive("xmin", x_min)
            }
            DistributionSpec::Lomax { alpha, scale } => {
                positive("alpha", alpha)?;
                positive("scale", scale)
            }
            DistributionSpec::IdentifiedOutliers { n, k, theta, b } => {
                positive("theta", theta)?;
                if !(b >= 1.0 && b.is_finite()) {
                    return Err(Error::BadSpec(format!("b must be at least 1, got {b}")));
                }
                if k >= n {
                    return Err(Error::BadSpec(format!("need k < n, got k={k}, n={n}")));
                }
                Ok(())
            }
        }
    }

    /// Draw `n` values. For the identified-outliers model `n` must match the
    /// model's own size.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        Ok(self.sample_labelled(n, rng)?.0)
    }

    /// Draw `n` values together with a flag marking contaminant draws.
    /// Contaminants, when present, occupy the last `k` positions.
    pub fn sample_labelled<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<bool>)> {
        self.validate()?;
        if n == 0 {
            return Err(Error::TooShort { len: 0, min: 1 });
        }
        let values: Vec<f64> = match *self {
            DistributionSpec::Exponential { theta } => {
                (0..n).map(|_| exponential(theta, rng)).collect()
            }
            DistributionSpec::HalfNormal => (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z.abs()
                })
                .collect(),
            DistributionSpec::Pareto { alpha, x_min } => (0..n)
                .map(|_| x_min * (open_uniform_log(rng) / alpha).exp())
                .collect(),
            DistributionSpec::Lomax { alpha, scale } => (0..n)
                .map(|_| scale * (open_uniform_log(rng) / alpha).exp_m1())
                .collect(),
            DistributionSpec::IdentifiedOutliers {
                n: size,
                k,
                theta,
                b,
            } => {
                if n != size {
                    return Err(Error::BadSpec(format!(
                        "identified-outliers model has n={size}, asked for {n} draws"
                    )));
                }
                let mut v: Vec<f64> = (0..n - k).map(|_| exponential(theta, rng)).collect();
                v.extend((0..k).map(|_| exponential(b * theta, rng)));
                let mut labels = vec![false; n - k];
                labels.resize(n, true);
                return Ok((v, labels));
            }
        };
        Ok((values, vec![false; n]))
    }
}

/// `-ln(1 - U)` for `U` uniform on `[0, 1)`, which is finite and nonnegative.
fn open_uniform_log<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -(-u).ln_1p()
}

fn exponential<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> f64 {
    theta * open_uniform_log(rng)
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Exponential { theta } => write!(f, "exp:theta={theta}"),
            DistributionSpec::HalfNormal => write!(f, "halfnormal"),
            DistributionSpec::Pareto { alpha, x_min } => {
                write!(f, "pareto:alpha={alpha},xmin={x_min}")
            }
            DistributionSpec::Lomax { alpha, scale } => {
                write!(f, "lomax:alpha={alpha},scale={scale}")
            }
            DistributionSpec::IdentifiedOutliers { n, k, theta, b } => {
                write!(f, "ident:n={n},k={k},theta={theta},b={b}")
            }
        }
    }
}

struct Params<'a> {
    spec: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn parse(spec: &'a str, body: &'a str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::BadSpec(format!("expected key=value in {spec:?}, got {item:?}")))?;
            if map.insert(k.trim(), v.trim()).is_some() {
                return Err(Error::BadSpec(format!("duplicate key {k:?} in {spec:?}")));
            }
        }
        Ok(Self { spec, map })
    }

    fn take<T: FromStr>(&mut self, key: &str, default: Option<T>) -> Result<T> {
        match self.map.remove(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::BadSpec(format!("bad value {raw:?} for {key} in {:?}", self.spec))),
            None => default
                .ok_or_else(|| Error::BadSpec(format!("missing {key} in {:?}", self.spec))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::BadSpec(format!("unknown key {k:?} in {:?}", self.spec))),
            None => Ok(()),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, body) = s.split_once(':').unwrap_or((s, ""));
        let mut p = Params::parse(s, body)?;
        let spec = match family.trim().to_ascii_lowercase().as_str() {
            "exp" | "exponential" => DistributionSpec::Exponential {
                theta: p.take("theta", Some(1.0))?,
            },
            "halfnormal" => DistributionSpec::HalfNormal,
            "pareto" => DistributionSpec::Pareto {
                alpha: p.take("alpha", None)?,
                x_min: p.take("xmin", Some(1.0))?,
            },
            "lomax" => DistributionSpec::Lomax {
                alpha: p.take("alpha", None)?,
                scale: p.take("scale", Some(1.0))?,
            },
            "ident" => DistributionSpec::IdentifiedOutliers {
                n: p.take("n", None)?,
                k: p.take("k", None)?,
                theta: p.take("theta", Some(1.0))?,
                b: p.take("b", None)?,
            },
            other => return Err(Error::BadSpec(format!("unknown family {other:?}"))),
        };
        p.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Deterministic stream derivation: replication `r` draws from a ChaCha8
/// generator keyed by `root_seed` on stream `r`, so its draws do not depend
/// on which worker runs it or in what order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPolicy {
    pub root_seed: u64,
}

impl SeedPolicy {
    pub fn new(root_seed: u64) -> Self {
        Self { root_seed }
    }

    pub fn stream(&self, r: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(r);
        rng
    }

    /// An independent policy for a named sub-purpose, e.g. calibration
    /// versus the main replications.
    pub fn derive(&self, tag: u64) -> SeedPolicy {
        SeedPolicy::new(splitmix64(self.root_seed ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
