//! Order-statistic bookkeeping and the R-statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative observations in nondecreasing order, with compensated prefix
/// sums so that `prefix[i]` is the sum of the `i` smallest values.
#[derive(Clone, Debug, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl SortedSample {
    /// Validate and sort `raw`.
    pub fn new(raw: &[f64]) -> Result<Self> {
        validate(raw)?;
        let mut values = raw.to_vec();
        values.sort_by(f64::total_cmp);
        Ok(Self::from_sorted_unchecked(values))
    }

    /// Sort `raw` and carry a per-observation tag along with each value.
    ///
    /// The returned tags are aligned with the sorted values.
    pub fn with_tags<T: Copy>(raw: &[f64], tags: &[T]) -> Result<(Self, Vec<T>)> {
        if raw.len() != tags.len() {
            return Err(Error::BadConfig(format!(
                "{} values but {} tags",
                raw.len(),
                tags.len()
            )));
        }
        validate(raw)?;
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
        let values = order.iter().map(|&i| raw[i]).collect();
        let tags = order.iter().map(|&i| tags[i]).collect();
        Ok((Self::from_sorted_unchecked(values), tags))
    }

    fn from_sorted_unchecked(values: Vec<f64>) -> Self {
        let prefix = compensated_prefix(&values);
        Self { values, prefix }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `prefix()[i]` is the sum of the first `i` order statistics; length `n + 1`.
    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn total(&self) -> f64 {
        self.prefix[self.len()]
    }

    /// Sum of the `m` smallest values.
    pub fn bottom_sum(&self, m: usize) -> f64 {
        self.prefix[m]
    }

    /// Sum of the `k` largest values.
    pub fn top_sum(&self, k: usize) -> f64 {
        let n = self.len();
        self.prefix[n] - self.prefix[n - k]
    }

    /// True when every observation has the same value.
    pub fn is_constant(&self) -> bool {
        self.values.first() == self.values.last()
    }

    /// Multiply every value by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let raw: Vec<f64> = self.values.iter().map(|v| v * c).collect();
        Self::new(&raw)
    }
}

fn validate(raw: &[f64]) -> Result<()> {
    if raw.len() < 2 {
        return Err(Error::TooShort {
            len: raw.len(),
            min: 2,
        });
    }
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value < 0.0 {
            return Err(Error::NegativeValue { index, value });
        }
    }
    Ok(())
}

// Neumaier's variant of Kahan summation; each prefix entry carries the
// running compensation so long samples keep full relative precision.
fn compensated_prefix(values: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        prefix.push(sum + comp);
    }
    prefix
}

/// The sequence `R_m = S_m / T_{n-m}` for `m = 1..n-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub n: usize,
    /// `r[m - 1]` holds `R_m`.
    pub r: Vec<f64>,
}

impl RatioSeries {
    /// `R_m` for a 1-based `m`.
    pub fn get(&self, m: usize) -> Option<f64> {
        m.checked_sub(1).and_then(|i| self.r.get(i).copied())
    }

    /// Smallest `m` with `R_m > kappa`.
    pub fn first_exceedance(&self, kappa: f64) -> Option<usize> {
        self.r.iter().position(|&v| v > kappa).map(|i| i + 1)
    }

    /// Pairs `(m, R_m)`.
    pub fn points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.r.iter().enumerate().map(|(i, &v)| (i + 1, v))
    }
}

/// Result of flagging the top block of a sample against a threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub kappa: f64,
    /// Smallest `m` with `R_m > kappa`, or `n - 1` when no ratio exceeds it.
    pub m_star: usize,
    /// Whether some `R_m` exceeded `kappa`.
    pub exceeded: bool,
    /// 1-based sorted positions `m_star + 1..=n`; empty when nothing exceeded.
    pub outlier_indices: Vec<usize>,
    /// κ-outlier count from block means, present for `kappa` in (0, 1).
    pub o_n: Option<usize>,
}

/// Build a [`SortedSample`]; see [`SortedSample::new`].
pub fn make_sorted_sample(raw: &[f64]) -> Result<SortedSample> {
    SortedSample::new(raw)
}

fn check_split(s: &SortedSample, m: usize) -> Result<()> {
    let n = s.len();
    if m == 0 || m >= n {
        return Err(Error::IndexOutOfRange {
            index: m,
            lo: 1,
            hi: n - 1,
        });
    }
    Ok(())
}

/// `S_m / T_{n-m}`.
pub fn r_statistic(s: &SortedSample, m: usize) -> Result<f64> {
    check_split(s, m)?;
    let top = s.total() - s.prefix[m];
    if top <= 0.0 {
        return Err(Error::ZeroDenominator { m });
    }
    Ok(s.prefix[m] / top)
}

/// All ratios `R_1, …, R_{n-1}` in one pass over the prefix sums.
pub fn r_series(s: &SortedSample) -> Result<RatioSeries> {
    let n = s.len();
    let total = s.total();
    let mut r = Vec::with_capacity(n - 1);
    for m in 1..n {
        let top = total - s.prefix[m];
        if top <= 0.0 {
            return Err(Error::ZeroDenominator { m });
        }
        r.push(s.prefix[m] / top);
    }
    Ok(RatioSeries { n, r })
}

/// The κ-outlier count from block means:
/// `n - min{ i : S_i / i < kappa * T_{n-i} / (n - i) }`, with `i` in `1..n-1`.
/// Returns 0 when no `i` satisfies the condition.
pub fn kappa_outlier_count(s: &SortedSample, kappa: f64) -> usize {
    let n = s.len();
    let total = s.total();
    (1..n)
        .find(|&i| {
            let bottom_mean = s.prefix[i] / i as f64;
            let top_mean = (total - s.prefix[i]) / (n - i) as f64;
            bottom_mean < kappa * top_mean
        })
        .map_or(0, |i| n - i)
}

/// Convert a threshold on block means into the equivalent threshold on block
/// sums: `(m / (n - m)) * kappa`.
pub fn kappa_rescale(kappa: f64, n: usize, m: usize) -> f64 {
    m as f64 / (n - m) as f64 * kappa
}

/// Flag the top block above the first split whose ratio exceeds `kappa`.
pub fn detect_outliers(s: &SortedSample, kappa: f64) -> Result<OutlierReport> {
    let series = r_series(s)?;
    let n = s.len();
    let (m_star, exceeded) = match series.first_exceedance(kappa) {
        Some(m) => (m, true),
        None => (n - 1, false),
    };
    let outlier_indices = if exceeded {
        ((m_star + 1)..=n).collect()
    } else {
        Vec::new()
    };
    let o_n = (kappa > 0.0 && kappa < 1.0).then(|| kappa_outlier_count(s, kappa));
    Ok(OutlierReport {
        kappa,
        m_star,
        exceeded,
        outlier_indices,
        o_n,
    })
}

/// Standardized mean of the top `k` order statistics: `((T_k / k) - mu) / sigma`.
pub fn selection_differential(s: &SortedSample, k: usize, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::BadSigma(sigma));
    }
    let n = s.len();
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange {
            index: k,
            lo: 1,
            hi: n,
        });
    }
    Ok((s.top_sum(k) / k as f64 - mu) / sigma)
}
