//! Globally adaptive 15-point Gauss–Kronrod quadrature.

#![allow(clippy::excessive_precision)]

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1] (positive half, last is the centre) and their
// weights; the embedded 7-point Gauss rule uses the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Cooperative cancellation flag shared between a caller and a long
/// computation.
#[derive(Clone, Debug, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }

    pub(crate) fn check(token: Option<&CancelToken>) -> Result<()> {
        match token {
            Some(t) if t.is_cancelled() => Err(Error::Cancelled),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    pub cancel: Option<CancelToken>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 500,
            cancel: None,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx)? + f(centre + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Integrate a fallible integrand over `[a, b]`, returning `(value, error estimate)`.
pub fn try_integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok((0.0, 0.0));
    }
    CancelToken::check(opts.cancel.as_ref())?;
    let (value, error) = gauss_kronrod(&mut f, a, b)?;
    let mut segments = vec![Segment { a, b, value, error }];
    let mut total = value;
    let mut total_err = error;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            return Ok((total, total_err));
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailure {
                estimate: total_err,
                tolerance: tol,
            });
        }
        CancelToken::check(opts.cancel.as_ref())?;
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // interval can no longer be split in floating point
            return Err(Error::QuadratureFailure {
                estimate: total_err,
                tolerance: tol,
            });
        }
        let (v1, e1) = gauss_kronrod(&mut f, seg.a, mid)?;
        let (v2, e2) = gauss_kronrod(&mut f, mid, seg.b)?;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        // re-sum occasionally to keep the running totals honest
        if segments.len() % 64 == 0 {
            total = segments.iter().map(|s| s.value).sum();
            total_err = segments.iter().map(|s| s.error).sum();
        }
    }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, opts).map(|(v, _)| v)
}

/// Integrate `f` over `[a, ∞)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F>(mut f: F, a: f64, opts: &QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate(
        |t| {
            let s = 1.0 - t;
            let y = f(a + t / s) / (s * s);
            if y.is_finite() {
                y
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        opts,
    )
}
