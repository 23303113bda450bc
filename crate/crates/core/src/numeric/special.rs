//! Thin wrappers over `statrs` special functions, in the forms used here.

use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

/// Density of Gamma(shape, 1) at `x`.
pub fn gamma_pdf(shape: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return if shape == 1.0 {
            1.0
        } else if shape < 1.0 {
            f64::INFINITY
        } else {
            0.0
        };
    }
    ((shape - 1.0) * x.ln() - x - ln_gamma(shape)).exp()
}

/// `P(G <= x)` for `G ~ Gamma(shape, 1)`.
pub fn gamma_cdf(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(shape, x)
    }
}

/// `P(G > x)` for `G ~ Gamma(shape, 1)`.
pub fn gamma_sf(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(shape, x)
    }
}

/// `ln( n! / ((m-1)! (n-m)!) )`, the normalizer of the `m`-th order statistic density.
pub fn ln_order_stat_norm(n: usize, m: usize) -> f64 {
    ln_factorial(n as u64) - ln_factorial((m - 1) as u64) - ln_factorial((n - m) as u64)
}
