//! Distribution of `R = S_{m-1} / T_{n-m}` for i.i.d. nonnegative samples.
//!
//! Conditioning on the `m`-th order statistic `X_(m) = u` splits the sample
//! into two independent blocks: the `m - 1` values below `u` are i.i.d. from
//! the parent truncated to `[0, u]`, and the `n - m` values above are i.i.d.
//! from the parent truncated to `[u, ∞)`. Hence
//!
//! ```text
//! P(R < κ | X_(m) = u) = ∫ f_{T | u}(t) · H_u^{*(m-1)}(κ t) dt
//! P(R < κ)             = ∫ P(R < κ | X_(m) = u) f_m(u) du
//! ```
//!
//! `H_u^{*(m-1)}` is built on a grid by iterated convolution. The top block
//! law comes from the parent: for the exponential it is the exact shifted
//! gamma given by memorylessness, other parents fall back to grids.
//!
//! Because `S_m = S_{m-1} + X_(m)` and `X_(m) / T_{n-m} <= 1 / (n - m)`,
//! the distribution of `S_m / T_{n-m}` is bracketed by that of
//! `S_{m-1} / T_{n-m}` evaluated at `κ - 1 / (n - m)` and at `κ`; see
//! [`sandwich_bounds`].

pub mod grid;
pub mod hypoexp;
pub mod parent;

pub use grid::{conv_power, convolve, DensityGrid};
pub use hypoexp::{f_l, f_t_exponential, hypoexp_density, HypoexpParams};
pub use parent::{
    truncated_left_cdf, truncated_right_cdf, BlockLaw, Exponential, HalfNormal, ParentModel,
    Uniform,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quadrature::{try_integrate, CancelToken, QuadOptions};
use crate::numeric::special::ln_order_stat_norm;
use parent::{push_grid_nodes, truncated_right_conv_cdf};

/// Five-point Gauss–Legendre rule on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Tuning for the grid and quadrature based evaluations.
#[derive(Clone, Debug)]
pub struct ExactOptions {
    /// Cells per truncated density grid for a single conditional evaluation.
    pub grid_intervals: usize,
    /// Cells per grid for the conditional evaluations inside the outer
    /// integral over `u`, which runs many of them.
    pub outer_grid_intervals: usize,
    /// Absolute tolerance of the outer integral over `u`.
    pub outer_abs_tol: f64,
    pub cancel: Option<CancelToken>,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            grid_intervals: 4096,
            outer_grid_intervals: 512,
            outer_abs_tol: 1e-5,
            cancel: None,
        }
    }
}

/// Lower and upper bounds on `P(S_m / T_{n-m} <= κ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
}

fn check_split(n: usize, m: usize, min_m: usize) -> Result<()> {
    if m < min_m || m + 1 > n {
        return Err(Error::IndexOutOfRange {
            index: m,
            lo: min_m,
            hi: n.saturating_sub(1),
        });
    }
    Ok(())
}

/// Density of the `m`-th order statistic of `n` draws:
/// `n! / ((m-1)! (n-m)!) F(u)^{m-1} (1 - F(u))^{n-m} f(u)`.
pub fn order_stat_density<M: ParentModel + ?Sized>(model: &M, n: usize, m: usize, u: f64) -> Result<f64> {
    if m == 0 || m > n {
        return Err(Error::IndexOutOfRange {
            index: m,
            lo: 1,
            hi: n,
        });
    }
    let f = model.pdf(u);
    if f <= 0.0 {
        return Ok(0.0);
    }
    let lower = model.cdf(u);
    let upper = model.sf(u);
    let mut ln = ln_order_stat_norm(n, m) + f.ln();
    if m > 1 {
        ln += (m - 1) as f64 * lower.ln();
    }
    if n > m {
        ln += (n - m) as f64 * upper.ln();
    }
    Ok(ln.exp())
}

/// [`order_stat_density`] over a set of abscissae.
pub fn order_stat_density_grid<M: ParentModel + ?Sized>(
    model: &M,
    n: usize,
    m: usize,
    us: &[f64],
) -> Result<Vec<f64>> {
    us.iter().map(|&u| order_stat_density(model, n, m, u)).collect()
}

/// `P(S_{m-1} / T_{n-m} < κ | X_(m) = u)` with default grid resolution.
pub fn f_r_given_m<M: ParentModel + ?Sized>(model: &M, n: usize, m: usize, u: f64, kappa: f64) -> Result<f64> {
    f_r_given_m_with(model, n, m, u, kappa, ExactOptions::default().grid_intervals)
}

/// `P(S_{m-1} / T_{n-m} < κ | X_(m) = u)` using `intervals` cells per grid.
pub fn f_r_given_m_with<M: ParentModel + ?Sized>(
    model: &M,
    n: usize,
    m: usize,
    u: f64,
    kappa: f64,
    intervals: usize,
) -> Result<f64> {
    check_split(n, m, 2)?;
    let head = model.cdf(u);
    let tail = model.sf(u);
    if !(head > 0.0 && tail > 0.0) {
        return Err(Error::DegenerateTruncation {
            u,
            mass: head.min(tail),
        });
    }
    if kappa <= 0.0 {
        return Ok(0.0);
    }
    if kappa >= (m - 1) as f64 / (n - m) as f64 {
        return Ok(1.0);
    }
    let bottom = truncated_right_conv_cdf(model, u, m - 1, intervals)?;
    let top = model.top_block_law(n - m, u, intervals)?;
    Ok(conditional_ratio_cdf(&bottom, &top, kappa))
}

/// `∫ f_top(t) · H(κ t) dt`, with `H` the bottom-block CDF grid (equal to 1
/// beyond its range). Integrated with Gauss–Legendre on every cell between
/// consecutive grid abscissae of either block.
fn conditional_ratio_cdf(bottom: &DensityGrid, top: &BlockLaw, kappa: f64) -> f64 {
    let s_max = bottom.t_max();
    let h = |s: f64| {
        if s >= s_max {
            1.0
        } else {
            bottom.value_at(s)
        }
    };
    let t_lo = top.lower();
    let t_hi = top.upper().min(s_max / kappa);
    if !(t_hi > t_lo) {
        return 1.0;
    }
    let mut points = vec![t_lo];
    push_grid_nodes(0.0, bottom.step(), bottom.len(), kappa, t_lo, t_hi, &mut points);
    top.breakpoints(t_lo, t_hi, &mut points);
    points.push(t_hi);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let max_cell = (t_hi - t_lo) / 512.0;
    let mut total = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((b - a) / max_cell).ceil().max(1.0) as usize;
        let width = (b - a) / pieces as f64;
        for p in 0..pieces {
            let lo = a + p as f64 * width;
            let mid = lo + 0.5 * width;
            let half = 0.5 * width;
            for &(x, wt) in &GL5 {
                let t = mid + half * x;
                total += wt * half * top.pdf(t) * h(kappa * t);
            }
        }
    }
    (total + top.sf(t_hi)).clamp(0.0, 1.0)
}

/// `P(S_{m-1} / T_{n-m} < κ)`.
pub fn prob_r_less_kappa<M: ParentModel + ?Sized>(model: &M, n: usize, m: usize, kappa: f64) -> Result<f64> {
    prob_r_less_kappa_with(model, n, m, kappa, &ExactOptions::default())
}

pub fn prob_r_less_kappa_with<M: ParentModel + ?Sized>(
    model: &M,
    n: usize,
    m: usize,
    kappa: f64,
    opts: &ExactOptions,
) -> Result<f64> {
    check_split(n, m, 1)?;
    if m == 1 {
        // S_0 = 0, so R is identically zero
        return Ok(if kappa > 0.0 { 1.0 } else { 0.0 });
    }
    if kappa <= 0.0 {
        return Ok(0.0);
    }
    if kappa >= (m - 1) as f64 / (n - m) as f64 {
        return Ok(1.0);
    }
    // substitute u = F^{-1}(p): f_m(u) du becomes the Beta(m, n - m + 1) density in p
    let ln_norm = ln_order_stat_norm(n, m);
    let quad = QuadOptions {
        abs_tol: opts.outer_abs_tol,
        rel_tol: 0.0,
        max_intervals: 200,
        cancel: opts.cancel.clone(),
    };
    let (value, _) = try_integrate(
        |p| {
            CancelToken::check(opts.cancel.as_ref())?;
            let weight =
                (ln_norm + (m - 1) as f64 * p.ln() + (n - m) as f64 * (-p).ln_1p()).exp();
            if weight == 0.0 {
                return Ok(0.0);
            }
            let u = model.quantile(p);
            Ok(refining_conditional(model, n, m, u, kappa, opts.outer_grid_intervals)? * weight)
        },
        0.0,
        1.0,
        &quad,
    )?;
    Ok(value.clamp(0.0, 1.0))
}

/// Far out in the upper tail a fixed cell count can be too coarse for the
/// truncated density; those nodes carry negligible weight, so refine there
/// instead of failing the whole integral.
fn refining_conditional<M: ParentModel + ?Sized>(
    model: &M,
    n: usize,
    m: usize,
    u: f64,
    kappa: f64,
    intervals: usize,
) -> Result<f64> {
    let mut cells = intervals;
    loop {
        match f_r_given_m_with(model, n, m, u, kappa, cells) {
            Err(Error::GridTooCoarse { .. }) if cells < intervals * 16 => cells *= 2,
            other => return other,
        }
    }
}

/// Bounds on `P(S_m / T_{n-m} <= κ)`: `P(R <= κ - 1/(n - m))` below and
/// `P(R <= κ)` above, with `R = S_{m-1} / T_{n-m}`.
///
/// From `R <= S_m / T_{n-m} <= R + 1/(n - m)`. The bracket is sometimes
/// quoted as `[P(R <= κ), P(R <= κ + 1/(n - m))]`, which has the shift on the
/// wrong side and fails to contain the true probability.
pub fn sandwich_bounds<M: ParentModel + ?Sized>(model: &M, n: usize, m: usize, kappa: f64) -> Result<Sandwich> {
    sandwich_bounds_with(model, n, m, kappa, &ExactOptions::default())
}

pub fn sandwich_bounds_with<M: ParentModel + ?Sized>(
    model: &M,
    n: usize,
    m: usize,
    kappa: f64,
    opts: &ExactOptions,
) -> Result<Sandwich> {
    check_split(n, m, 2)?;
    let lower = prob_r_less_kappa_with(model, n, m, kappa - 1.0 / (n - m) as f64, opts)?;
    let upper = prob_r_less_kappa_with(model, n, m, kappa, opts)?;
    Ok(Sandwich {
        lower: lower.clamp(0.0, 1.0),
        upper: upper.clamp(0.0, 1.0).max(lower),
    })
}
