//! Densities and CDFs tabulated on uniform grids starting at zero.

use crate::error::{Error, Result};
use crate::par::fill_indexed;

/// Allowed drift of the trapezoid mass before a grid is considered too coarse.
pub const NORMALIZATION_LIMIT: f64 = 1e-4;

/// Values `y[i]` at abscissae `t[i] = i * step`, `i = 0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    step: f64,
    y: Vec<f64>,
}

impl DensityGrid {
    pub fn new(step: f64, y: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::BadConfig(format!("grid step must be positive, got {step}")));
        }
        if y.len() < 2 {
            return Err(Error::TooShort {
                len: y.len(),
                min: 2,
            });
        }
        if let Some(index) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { step, y })
    }

    /// Tabulate `f` on `[0, t_max]` with `intervals` equal cells.
    pub fn from_fn<F: Fn(f64) -> f64>(t_max: f64, intervals: usize, f: F) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::BadConfig("grid needs at least one interval".into()));
        }
        let step = t_max / intervals as f64;
        let y = (0..=intervals).map(|i| f(i as f64 * step)).collect();
        Self::new(step, y)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.y.len() - 1)
    }

    /// Trapezoid integral over the whole grid.
    pub fn mass(&self) -> f64 {
        let inner: f64 = self.y[1..self.y.len() - 1].iter().sum();
        self.step * (inner + 0.5 * (self.y[0] + self.y[self.y.len() - 1]))
    }

    /// Linear interpolation; zero outside `[0, t_max]`.
    pub fn value_at(&self, t: f64) -> f64 {
        if !(t >= 0.0) || t > self.t_max() {
            return 0.0;
        }
        let pos = t / self.step;
        let i = (pos.floor() as usize).min(self.y.len() - 2);
        let frac = pos - i as f64;
        self.y[i] + frac * (self.y[i + 1] - self.y[i])
    }

    /// Cumulative trapezoid integral, clamped to `[0, 1]` and made nondecreasing.
    pub fn cdf(&self) -> DensityGrid {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.y.len());
        out.push(0.0);
        for w in self.y.windows(2) {
            acc += 0.5 * self.step * (w[0] + w[1]);
            let prev = *out.last().unwrap_or(&0.0);
            out.push(acc.clamp(prev, 1.0));
        }
        DensityGrid {
            step: self.step,
            y: out,
        }
    }

    fn normalized(mut self) -> Result<Self> {
        let mass = self.mass();
        let drift = (mass - 1.0).abs();
        if !(drift <= NORMALIZATION_LIMIT) {
            return Err(Error::GridTooCoarse {
                drift,
                limit: NORMALIZATION_LIMIT,
            });
        }
        for v in &mut self.y {
            *v /= mass;
        }
        Ok(self)
    }
}

/// Trapezoid discrete convolution of two densities sharing the same step.
/// The result covers `[0, a.t_max() + b.t_max()]`.
pub fn convolve(a: &DensityGrid, b: &DensityGrid) -> Result<DensityGrid> {
    if (a.step - b.step).abs() > 1e-12 * a.step {
        return Err(Error::BadConfig("convolved grids must share a step".into()));
    }
    let na = a.len() - 1;
    let nb = b.len() - 1;
    let h = a.step;
    let mut out = vec![0.0; na + nb + 1];
    fill_indexed(&mut out, 512, |i| {
        let lo = i.saturating_sub(nb);
        let hi = i.min(na);
        if lo >= hi {
            return 0.0;
        }
        let mut s = 0.5 * (a.y[lo] * b.y[i - lo] + a.y[hi] * b.y[i - hi]);
        for j in lo + 1..hi {
            s += a.y[j] * b.y[i - j];
        }
        h * s
    });
    DensityGrid::new(h, out)
}

/// `k`-fold self-convolution by iterated discrete convolution. Each step is
/// checked for normalization drift and renormalized.
pub fn conv_power(g: &DensityGrid, k: usize) -> Result<DensityGrid> {
    if k == 0 {
        return Err(Error::BadConfig("convolution power must be at least 1".into()));
    }
    let base = g.clone().normalized()?;
    let mut acc = base.clone();
    for _ in 1..k {
        acc = convolve(&acc, &base)?.normalized()?;
    }
    Ok(acc)
}
