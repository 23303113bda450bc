//! Sums of independent exponentials with distinct rates, and the top-block
//! sum of an exponential sample built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quadrature::{try_integrate, QuadOptions};
use crate::numeric::special::gamma_pdf;

/// Relative separation below which two rates are treated as equal.
pub const DUPLICATE_RATE_TOL: f64 = 1e-12;

/// Rates `beta_i` of independent exponentials and the coefficients
/// `prod_j beta_j / prod_{j != i} (beta_j - beta_i)` of the sum's density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypoexpParams {
    rates: Vec<f64>,
    weights: Vec<f64>,
}

impl HypoexpParams {
    pub fn new(rates: &[f64]) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::TooShort { len: 0, min: 1 });
        }
        if let Some(&bad) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::BadRate(bad));
        }
        for (i, &a) in rates.iter().enumerate() {
            for &b in &rates[i + 1..] {
                if (a - b).abs() <= DUPLICATE_RATE_TOL * a.abs().max(b.abs()) {
                    return Err(Error::DuplicateRates(a, b));
                }
            }
        }
        let product: f64 = rates.iter().product();
        let weights = rates
            .iter()
            .enumerate()
            .map(|(i, &bi)| {
                let denom: f64 = rates
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &bj)| bj - bi)
                    .product();
                product / denom
            })
            .collect();
        Ok(Self {
            rates: rates.to_vec(),
            weights,
        })
    }

    /// Rates `lambda_k / (n - m)` with `lambda_k = n - k + 1`, `k = 1..=m+1`.
    pub fn renyi(n: usize, m: usize) -> Result<Self> {
        check_renyi(n, m)?;
        let scale = (n - m) as f64;
        let rates: Vec<f64> = renyi_lambdas(n, m).iter().map(|l| l / scale).collect();
        Self::new(&rates)
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        self.rates.iter().map(|r| 1.0 / r).sum()
    }

    /// Density of the sum at `t`; zero for `t <= 0`.
    ///
    /// Evaluated by uniformizing the chain that passes through one
    /// exponential stage per rate, so every term is nonnegative. The
    /// alternating closed form in [`closed_form_density`](Self::closed_form_density)
    /// loses all precision once the weights grow large relative to the density.
    pub fn density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.rates.len() - 1;
        self.rates[last] * self.uniformized(t, |v| v[last])
    }

    /// CDF of the sum.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let survival = self.uniformized(t, |v| v.iter().sum());
        (1.0 - survival).clamp(0.0, 1.0)
    }

    /// `sum_k Poisson(k; L t) * read(p_k)` where `p_k` is the stage
    /// occupancy after `k` steps of the uniformized jump chain with rate `L`.
    fn uniformized(&self, t: f64, read: impl Fn(&[f64]) -> f64) -> f64 {
        let top = self.rates.iter().copied().fold(0.0, f64::max);
        let lt = top * t;
        let steps = (lt + 12.0 * lt.sqrt() + 40.0).ceil() as usize;
        let mut occupancy = vec![0.0; self.rates.len()];
        occupancy[0] = 1.0;
        let mut ln_weight = -lt;
        let mut total = 0.0;
        for k in 0..=steps {
            if k > 0 {
                ln_weight += lt.ln() - (k as f64).ln();
                let mut carry = 0.0;
                for (p, r) in occupancy.iter_mut().zip(&self.rates) {
                    let leave = *p * r / top;
                    *p = *p - leave + carry;
                    carry = leave;
                }
            }
            total += ln_weight.exp() * read(&occupancy);
        }
        total
    }

    /// The closed form `sum_i w_i exp(-beta_i t)`, accurate only while the
    /// alternating terms do not cancel badly.
    pub fn closed_form_density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.rates
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * (-t * r).exp())
            .sum()
    }

    /// Ratio of the absolute closed-form terms to their sum at `t`; the
    /// closed form carries roughly this many ulps of relative error.
    pub fn closed_form_condition(&self, t: f64) -> f64 {
        let abs: f64 = self
            .rates
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| (w * (-t * r).exp()).abs())
            .sum();
        abs / self.closed_form_density(t).abs()
    }
}

/// Density of a sum of independent exponentials with the given distinct rates.
pub fn hypoexp_density(params: &HypoexpParams, t: f64) -> f64 {
    params.density(t)
}

fn check_renyi(n: usize, m: usize) -> Result<()> {
    if n < 3 || m == 0 || m > n - 2 {
        return Err(Error::IndexOutOfRange {
            index: m,
            lo: 1,
            hi: n.saturating_sub(2),
        });
    }
    Ok(())
}

/// `lambda_k = n - k + 1` for `k = 1..=m+1`.
pub fn renyi_lambdas(n: usize, m: usize) -> Vec<f64> {
    (1..=m + 1).map(|k| (n - k + 1) as f64).collect()
}

/// Density of `L = sum_{k<=m+1} beta_k Z_k` with `beta_k = (n - m) / lambda_k`,
/// written in the integer-difference form
/// `(lambda_1 … lambda_{m+1} / (n - m)) * sum_i psi_i exp(-lambda_i x / (n - m))`,
/// `1 / psi_i = prod_{j != i} (lambda_j - lambda_i)`.
pub fn f_l(n: usize, m: usize, x: f64) -> Result<f64> {
    check_renyi(n, m)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let lambdas = renyi_lambdas(n, m);
    let scale = (n - m) as f64;
    let lead: f64 = lambdas.iter().product::<f64>() / scale;
    let mut sum = 0.0;
    for (i, &li) in lambdas.iter().enumerate() {
        let inv_psi: f64 = lambdas
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &lj)| lj - li)
            .product();
        sum += (-li * x / scale).exp() / inv_psi;
    }
    Ok((lead * sum).max(0.0))
}

/// Density of `T_{n-m}`, the sum of the top `n - m` order statistics of a
/// standard exponential sample of size `n`, as the convolution of `f_L` with
/// the Gamma(n - m - 1, 1) density of the remaining Rényi terms.
pub fn f_t_exponential(n: usize, m: usize, t: f64) -> Result<f64> {
    f_t_exponential_with(n, m, t, &QuadOptions::abs(1e-10))
}

pub fn f_t_exponential_with(n: usize, m: usize, t: f64, opts: &QuadOptions) -> Result<f64> {
    let params = HypoexpParams::renyi(n, m)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let shape = (n - m - 1) as f64;
    let (v, _) = try_integrate(
        |x| Ok(params.density(t - x) * gamma_pdf(shape, x)),
        0.0,
        t,
        opts,
    )?;
    Ok(v.max(0.0))
}
