//! Parent distributions on `[0, ∞)` and the conditional laws of block sums.

use statrs::function::erf::{erf, erf_inv};

use super::grid::{conv_power, DensityGrid};
use crate::error::{Error, Result};
use crate::numeric::special::{gamma_cdf, gamma_pdf, gamma_sf};

/// Upper-tail mass left out when a grid must cover an unbounded support.
const TAIL_EPS: f64 = 1e-12;

/// A continuous parent distribution supported on `[0, ∞)`.
pub trait ParentModel: Sync {
    fn name(&self) -> String;
    fn cdf(&self, x: f64) -> f64;
    fn pdf(&self, x: f64) -> f64;
    fn quantile(&self, p: f64) -> f64;

    /// Survival function `1 - F(x)`; override where it can be computed without cancellation.
    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Law of the sum of `k` i.i.d. draws from the parent conditioned on
    /// exceeding `u`. The default discretizes the excess over `u` on a grid
    /// of `intervals` cells and takes its `k`-fold convolution.
    fn top_block_law(&self, k: usize, u: f64, intervals: usize) -> Result<BlockLaw> {
        grid_top_block(self, k, u, intervals)
    }
}

/// Exponential with mean `theta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponential {
    pub theta: f64,
}

impl Exponential {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::BadSpec(format!("exponential theta must be positive, got {theta}")));
        }
        Ok(Self { theta })
    }

    pub fn standard() -> Self {
        Self { theta: 1.0 }
    }
}

impl ParentModel for Exponential {
    fn name(&self) -> String {
        format!("exponential(theta={})", self.theta)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x / self.theta).exp_m1()
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            (-x / self.theta).exp() / self.theta
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        -self.theta * (-p).ln_1p()
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (-x / self.theta).exp()
        }
    }

    /// Memorylessness: the excesses over `u` are again exponential, so the
    /// block is `k u + theta * Gamma(k, 1)`.
    fn top_block_law(&self, k: usize, u: f64, _intervals: usize) -> Result<BlockLaw> {
        Ok(BlockLaw::ShiftedGamma {
            shift: k as f64 * u,
            shape: k as f64,
            scale: self.theta,
        })
    }
}

/// Uniform on `[0, width]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Uniform {
    pub width: f64,
}

impl ParentModel for Uniform {
    fn name(&self) -> String {
        format!("uniform(0,{})", self.width)
    }

    fn cdf(&self, x: f64) -> f64 {
        (x / self.width).clamp(0.0, 1.0)
    }

    fn pdf(&self, x: f64) -> f64 {
        if (0.0..=self.width).contains(&x) {
            1.0 / self.width
        } else {
            0.0
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        p.clamp(0.0, 1.0) * self.width
    }
}

/// `|Z|` with `Z` standard normal.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HalfNormal;

impl ParentModel for HalfNormal {
    fn name(&self) -> String {
        "halfnormal".into()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            erf(x / std::f64::consts::SQRT_2)
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * x * x).exp()
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        std::f64::consts::SQRT_2 * erf_inv(p.clamp(0.0, 1.0))
    }
}

/// Distribution of a block sum given the split value `u`.
#[derive(Clone, Debug)]
pub enum BlockLaw {
    /// `shift + scale * Gamma(shape, 1)`.
    ShiftedGamma { shift: f64, shape: f64, scale: f64 },
    /// `offset + Y` with the density of `Y` tabulated on a grid.
    Grid {
        offset: f64,
        density: DensityGrid,
        cdf: DensityGrid,
    },
}

impl BlockLaw {
    pub fn lower(&self) -> f64 {
        match self {
            BlockLaw::ShiftedGamma { shift, .. } => *shift,
            BlockLaw::Grid { offset, .. } => *offset,
        }
    }

    /// Right end of the support, infinite for the gamma form.
    pub fn upper(&self) -> f64 {
        match self {
            BlockLaw::ShiftedGamma { .. } => f64::INFINITY,
            BlockLaw::Grid {
                offset, density, ..
            } => offset + density.t_max(),
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        match self {
            BlockLaw::ShiftedGamma {
                shift,
                shape,
                scale,
            } => gamma_pdf(*shape, (t - shift) / scale) / scale,
            BlockLaw::Grid {
                offset, density, ..
            } => density.value_at(t - offset),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            BlockLaw::ShiftedGamma {
                shift,
                shape,
                scale,
            } => gamma_cdf(*shape, (t - shift) / scale),
            BlockLaw::Grid { offset, cdf, .. } => {
                if t >= offset + cdf.t_max() {
                    1.0
                } else {
                    cdf.value_at(t - offset)
                }
            }
        }
    }

    pub fn sf(&self, t: f64) -> f64 {
        match self {
            BlockLaw::ShiftedGamma {
                shift,
                shape,
                scale,
            } => gamma_sf(*shape, (t - shift) / scale),
            BlockLaw::Grid { .. } => (1.0 - self.cdf(t)).max(0.0),
        }
    }

    /// Grid abscissae inside `(a, b)`, where the tabulated density has kinks.
    pub(crate) fn breakpoints(&self, a: f64, b: f64, out: &mut Vec<f64>) {
        if let BlockLaw::Grid {
            offset, density, ..
        } = self
        {
            push_grid_nodes(*offset, density.step(), density.len(), 1.0, a, b, out);
        }
    }
}

/// Append `(offset + i * step) / scale` for grid indices landing strictly inside `(a, b)`.
pub(crate) fn push_grid_nodes(
    offset: f64,
    step: f64,
    len: usize,
    scale: f64,
    a: f64,
    b: f64,
    out: &mut Vec<f64>,
) {
    let first = (((a * scale - offset) / step).floor().max(0.0)) as usize;
    for i in first..len {
        let t = (offset + i as f64 * step) / scale;
        if t >= b {
            break;
        }
        if t > a {
            out.push(t);
        }
    }
}

/// `G_u(t)`: CDF of the parent truncated to `[u, ∞)`.
pub fn truncated_left_cdf<M: ParentModel + ?Sized>(model: &M, u: f64, t: f64) -> Result<f64> {
    let tail = model.sf(u);
    if !(tail > 0.0) {
        return Err(Error::DegenerateTruncation { u, mass: tail });
    }
    if t < u {
        return Ok(0.0);
    }
    // F(t) - F(u) = sf(u) - sf(t)
    Ok(((tail - model.sf(t)) / tail).clamp(0.0, 1.0))
}

/// `H_u(t)`: CDF of the parent truncated to `[0, u]`, equal to 1 above `u`.
pub fn truncated_right_cdf<M: ParentModel + ?Sized>(model: &M, u: f64, t: f64) -> Result<f64> {
    let head = model.cdf(u);
    if !(head > 0.0) {
        return Err(Error::DegenerateTruncation { u, mass: head });
    }
    if t >= u {
        return Ok(1.0);
    }
    Ok((model.cdf(t) / head).clamp(0.0, 1.0))
}

/// Density of the right-truncated parent on `[0, u]`, tabulated on `intervals` cells.
pub fn truncated_right_density<M: ParentModel + ?Sized>(
    model: &M,
    u: f64,
    intervals: usize,
) -> Result<DensityGrid> {
    let head = model.cdf(u);
    if !(head > 0.0) {
        return Err(Error::DegenerateTruncation { u, mass: head });
    }
    DensityGrid::from_fn(u, intervals, |t| model.pdf(t) / head)
}

/// CDF of the sum of `count` i.i.d. draws from the parent truncated to `[0, u]`,
/// i.e. `H_u^{*count}`, tabulated on `[0, count * u]`.
pub fn truncated_right_conv_cdf<M: ParentModel + ?Sized>(
    model: &M,
    u: f64,
    count: usize,
    intervals: usize,
) -> Result<DensityGrid> {
    let base = truncated_right_density(model, u, intervals)?;
    Ok(conv_power(&base, count)?.cdf())
}

fn grid_top_block<M: ParentModel + ?Sized>(
    model: &M,
    k: usize,
    u: f64,
    intervals: usize,
) -> Result<BlockLaw> {
    let tail = model.sf(u);
    if !(tail > 0.0) {
        return Err(Error::DegenerateTruncation { u, mass: tail });
    }
    let reach = model.quantile(1.0 - TAIL_EPS * tail).max(u) - u;
    let reach = if reach.is_finite() && reach > 0.0 {
        reach
    } else {
        return Err(Error::DegenerateTruncation { u, mass: tail });
    };
    let excess = DensityGrid::from_fn(reach, intervals, |x| model.pdf(u + x) / tail)?;
    let density = conv_power(&excess, k)?;
    let cdf = density.cdf();
    Ok(BlockLaw::Grid {
        offset: k as f64 * u,
        density,
        cdf,
    })
}
