//! Curvature helpers and kneedle-style knee detection, used to pick a κ
//! threshold from a single sample's R-curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{r_series, SortedSample};

/// A sampled curve with strictly increasing abscissae.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Curve {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::BadConfig(format!(
                "curve has {} abscissae but {} ordinates",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 3 {
            return Err(Error::TooShort { len: x.len(), min: 3 });
        }
        if let Some(index) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: index % x.len(),
            });
        }
        if let Some(i) = x.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::BadConfig(format!(
                "abscissae must be strictly increasing (index {})",
                i + 1
            )));
        }
        Ok(Self { x, y })
    }

    /// `y` sampled at `x = 0, 1, …`.
    pub fn from_values(y: Vec<f64>) -> Result<Self> {
        let x = (0..y.len()).map(|i| i as f64).collect();
        Self::new(x, y)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Direction and concavity of the curve whose knee is sought.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveShape {
    #[default]
    IncreasingConvex,
    IncreasingConcave,
    DecreasingConvex,
    DecreasingConcave,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KneedleConfig {
    pub sensitivity: f64,
    /// Width of the centered moving average applied to `y`; 1 disables it.
    pub smoothing_window: usize,
    pub shape: CurveShape,
}

impl Default for KneedleConfig {
    fn default() -> Self {
        Self {
            sensitivity: 5.0,
            smoothing_window: 1,
            shape: CurveShape::IncreasingConvex,
        }
    }
}

impl KneedleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sensitivity >= 0.0 && self.sensitivity.is_finite()) {
            return Err(Error::BadConfig(format!(
                "sensitivity must be nonnegative, got {}",
                self.sensitivity
            )));
        }
        if self.smoothing_window == 0 || self.smoothing_window.is_multiple_of(2) {
            return Err(Error::BadConfig(format!(
                "smoothing window must be odd and positive, got {}",
                self.smoothing_window
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElbowResult {
    pub found: bool,
    pub index: Option<usize>,
    pub x_at_knee: Option<f64>,
    /// Taken from the unsmoothed curve.
    pub y_at_knee: Option<f64>,
}

impl ElbowResult {
    fn none() -> Self {
        Self {
            found: false,
            index: None,
            x_at_knee: None,
            y_at_knee: None,
        }
    }
}

/// Curvature of a graph `y = f(x)` from its first and second derivatives.
pub fn curvature(fp: f64, fpp: f64) -> f64 {
    fpp / (1.0 + fp * fp).powf(1.5)
}

/// Menger curvature of every interior point triple; endpoints and collinear
/// triples get 0.
pub fn discrete_curvature(curve: &Curve) -> Vec<f64> {
    let (x, y) = (curve.x(), curve.y());
    let mut out = vec![0.0; x.len()];
    for i in 1..x.len() - 1 {
        let (ax, ay) = (x[i] - x[i - 1], y[i] - y[i - 1]);
        let (bx, by) = (x[i + 1] - x[i], y[i + 1] - y[i]);
        let (cx, cy) = (x[i + 1] - x[i - 1], y[i + 1] - y[i - 1]);
        let cross = ax * by - ay * bx;
        let (la, lb) = (ax.hypot(ay), bx.hypot(by));
        let sides = la * lb * cx.hypot(cy);
        // a cross product at rounding level means the triple is collinear
        if cross.abs() > 1e-12 * la * lb && sides > 0.0 {
            out[i] = 2.0 * cross.abs() / sides;
        }
    }
    out
}

fn moving_average(y: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return y.to_vec();
    }
    let half = window / 2;
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(y.len() - 1);
            y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn min_max(v: &[f64]) -> Option<Vec<f64>> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    (span > 0.0).then(|| v.iter().map(|t| (t - lo) / span).collect())
}

/// Locate the knee of `curve`.
///
/// The curve is optionally smoothed, both axes are min–max normalized and a
/// difference curve is formed so that the knee becomes a local maximum. Each
/// local maximum is a candidate; a candidate is confirmed once the difference
/// curve drops below its height minus `sensitivity` times the mean normalized
/// x-step before the next candidate. The first confirmed candidate wins.
pub fn detect_knee(curve: &Curve, cfg: &KneedleConfig) -> Result<ElbowResult> {
    cfg.validate()?;
    let n = curve.len();
    let smoothed = moving_average(curve.y(), cfg.smoothing_window);
    let (Some(xn), Some(yn)) = (min_max(curve.x()), min_max(&smoothed)) else {
        return Ok(ElbowResult::none());
    };
    let diff: Vec<f64> = xn
        .iter()
        .zip(&yn)
        .map(|(&x, &y)| match cfg.shape {
            CurveShape::IncreasingConvex => x - y,
            CurveShape::IncreasingConcave => y - x,
            CurveShape::DecreasingConvex => 1.0 - y - x,
            CurveShape::DecreasingConcave => y + x - 1.0,
        })
        .collect();

    let candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| diff[i] > diff[i - 1] && diff[i] >= diff[i + 1])
        .collect();
    let mean_step = (xn[n - 1] - xn[0]) / (n - 1) as f64;

    for (k, &c) in candidates.iter().enumerate() {
        let end = candidates.get(k + 1).copied().unwrap_or(n);
        let threshold = diff[c] - cfg.sensitivity * mean_step;
        if diff[c + 1..end].iter().any(|&d| d < threshold) {
            return Ok(ElbowResult {
                found: true,
                index: Some(c),
                x_at_knee: Some(curve.x()[c]),
                y_at_knee: Some(curve.y()[c]),
            });
        }
    }
    Ok(ElbowResult::none())
}

/// Threshold picked from a sample's R-curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaChoice {
    pub kappa: f64,
    pub m_star: usize,
}

/// Run knee detection on the curve `m ↦ R_m` and return `R_m` at the knee.
/// The curve is always treated as increasing and convex.
pub fn kappa_from_sample(s: &SortedSample, cfg: &KneedleConfig) -> Result<KappaChoice> {
    // All ratios are then exactly m/(n - m), which carries no information
    // about the sample; a knee found on it would be an artifact.
    if s.is_constant() {
        return Err(Error::NotFound);
    }
    let series = r_series(s)?;
    let x = (1..=series.r.len()).map(|m| m as f64).collect();
    let curve = Curve::new(x, series.r.clone())?;
    let cfg = KneedleConfig {
        shape: CurveShape::IncreasingConvex,
        ..*cfg
    };
    let knee = detect_knee(&curve, &cfg)?;
    match knee.index {
        Some(i) => Ok(KappaChoice {
            kappa: series.r[i],
            m_star: i + 1,
        }),
        None => Err(Error::NotFound),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{DistributionSpec, SeedPolicy};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn curvature_closed_forms() {
        assert_eq!(curvature(3.7, 0.0), 0.0);
        assert_eq!(curvature(0.0, 1.0), 1.0);
        // upper semicircle of radius r: y = sqrt(r^2 - x^2)
        let r = 2.5;
        for &x in &[-2.0, -0.7, 0.0, 1.1, 2.2] {
            let s: f64 = r * r - x * x;
            let fp = -x / s.sqrt();
            let fpp = -r * r / s.powf(1.5);
            assert_abs_diff_eq!(curvature(fp, fpp).abs(), 1.0 / r, epsilon = 1e-6);
        }
    }

    #[test]
    fn menger_on_circle_and_line() {
        let angles: Vec<f64> = (0..40).map(|i| 0.1 + i as f64 * 0.07).collect();
        let x: Vec<f64> = angles.iter().map(|a| -2.0 * a.cos()).collect();
        let y: Vec<f64> = angles.iter().map(|a| 2.0 * a.sin()).collect();
        let k = discrete_curvature(&Curve::new(x, y).unwrap());
        assert_eq!(k[0], 0.0);
        assert_eq!(k[39], 0.0);
        for v in &k[1..39] {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-9);
        }
        let line = Curve::new(grid(20), grid(20).iter().map(|t| 3.0 * t - 1.0).collect()).unwrap();
        assert!(discrete_curvature(&line).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn menger_peaks_at_breakpoint() {
        let x = grid(101);
        let y = x.iter().map(|&t| if t <= 0.5 { 0.0 } else { 4.0 * (t - 0.5) }).collect();
        let k = discrete_curvature(&Curve::new(x, y).unwrap());
        let arg = (0..k.len()).max_by(|&a, &b| k[a].total_cmp(&k[b])).unwrap();
        assert_eq!(arg, 50);
    }

    #[test]
    fn straight_line_has_no_knee() {
        let c = Curve::new(grid(1000), grid(1000)).unwrap();
        let r = detect_knee(&c, &KneedleConfig::default()).unwrap();
        assert!(!r.found);
        assert_eq!(r.index, None);
    }

    #[test]
    fn square_root_knee() {
        let x = grid(1000);
        let y = x.iter().map(|t| t.sqrt()).collect();
        let cfg = KneedleConfig {
            shape: CurveShape::IncreasingConcave,
            ..KneedleConfig::default()
        };
        let r = detect_knee(&Curve::new(x, y).unwrap(), &cfg).unwrap();
        let at = r.x_at_knee.unwrap();
        assert!((at - 0.25).abs() <= 1.0 / 999.0, "knee at {at}");
    }

    #[test]
    fn piecewise_linear_breakpoint() {
        let x = grid(1001);
        let y: Vec<f64> = x.iter().map(|&t| if t <= 0.5 { 0.1 * t } else { 0.05 + 6.0 * (t - 0.5) }).collect();
        let c = Curve::new(x, y).unwrap();
        for s in [0.0, 0.5, 1.0] {
            let cfg = KneedleConfig {
                sensitivity: s,
                ..KneedleConfig::default()
            };
            let r = detect_knee(&c, &cfg).unwrap();
            assert!((r.x_at_knee.unwrap() - 0.5).abs() <= 1e-3 + 1e-12);
        }
    }

    #[test]
    fn decreasing_shapes() {
        // mirror images of the increasing cases land at the mirrored knee
        let x = grid(501);
        let convex: Vec<f64> = x.iter().map(|&t| (1.0 - t).powi(4)).collect();
        let mirrored: Vec<f64> = x.iter().map(|&t| t.powi(4)).collect();
        let dec = detect_knee(
            &Curve::new(x.clone(), convex).unwrap(),
            &KneedleConfig {
                shape: CurveShape::DecreasingConvex,
                sensitivity: 1.0,
                ..KneedleConfig::default()
            },
        )
        .unwrap();
        let inc = detect_knee(
            &Curve::new(x, mirrored).unwrap(),
            &KneedleConfig {
                sensitivity: 1.0,
                ..KneedleConfig::default()
            },
        )
        .unwrap();
        assert_eq!(dec.index.unwrap(), 500 - inc.index.unwrap());
    }

    #[test]
    fn smoothing_keeps_y_from_raw_curve() {
        let x = grid(200);
        let y: Vec<f64> = x.iter().map(|t| t.powi(6) + 0.001 * (t * 300.0).sin()).collect();
        let cfg = KneedleConfig {
            smoothing_window: 9,
            sensitivity: 1.0,
            ..KneedleConfig::default()
        };
        let c = Curve::new(x, y.clone()).unwrap();
        let r = detect_knee(&c, &cfg).unwrap();
        assert_eq!(r.y_at_knee.unwrap(), y[r.index.unwrap()]);
        assert!(detect_knee(&c, &KneedleConfig { smoothing_window: 4, ..cfg }).is_err());
    }

    #[test]
    fn bad_curves() {
        assert!(matches!(Curve::from_values(vec![1.0, 2.0]), Err(Error::TooShort { .. })));
        assert!(Curve::new(vec![0.0, 1.0, 1.0], vec![0.0; 3]).is_err());
        assert!(Curve::new(vec![0.0, 1.0, 2.0], vec![0.0, f64::NAN, 1.0]).is_err());
        let flat = Curve::from_values(vec![2.0; 10]).unwrap();
        assert!(!detect_knee(&flat, &KneedleConfig::default()).unwrap().found);
    }

    #[test]
    fn constant_sample_has_no_threshold() {
        let s = SortedSample::new(&[4.0; 1000]).unwrap();
        assert_eq!(kappa_from_sample(&s, &KneedleConfig::default()), Err(Error::NotFound));
    }

    #[test]
    fn kappa_is_a_ratio_of_the_sample() {
        let spec = DistributionSpec::Pareto { alpha: 1.5, x_min: 1.0 };
        let seed = SeedPolicy::new(21);
        for r in 0..200 {
            let s = SortedSample::new(&spec.sample(1000, &mut seed.stream(r)).unwrap()).unwrap();
            let k = kappa_from_sample(&s, &KneedleConfig::default()).unwrap();
            assert!(k.kappa > 0.0 && k.kappa.is_finite());
            assert_eq!(k.kappa, r_series(&s).unwrap().get(k.m_star).unwrap());
        }
    }

    fn convexish() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 5..200).prop_map(|steps| {
            // cumulative sum of increasing increments: a convex, increasing curve
            let mut inc: Vec<f64> = steps.iter().map(|s| s * s * s).collect();
            inc.sort_by(f64::total_cmp);
            let mut acc = 0.0;
            inc.iter()
                .map(|d| {
                    acc += d;
                    acc
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn knee_invariant_under_affine_y(y in convexish(), a in 0.01f64..100.0, b in -50.0f64..50.0) {
            let cfg = KneedleConfig { sensitivity: 1.0, ..KneedleConfig::default() };
            let base = detect_knee(&Curve::from_values(y.clone()).unwrap(), &cfg).unwrap();
            let moved = detect_knee(&Curve::from_values(y.iter().map(|v| a * v + b).collect()).unwrap(), &cfg).unwrap();
            prop_assert_eq!(base.index, moved.index);
        }

        #[test]
        fn higher_sensitivity_never_moves_knee_earlier(y in convexish(), s1 in 0.0f64..5.0, ds in 0.0f64..5.0) {
            let c = Curve::from_values(y).unwrap();
            let lo = detect_knee(&c, &KneedleConfig { sensitivity: s1, ..KneedleConfig::default() }).unwrap();
            let hi = detect_knee(&c, &KneedleConfig { sensitivity: s1 + ds, ..KneedleConfig::default() }).unwrap();
            if let Some(h) = hi.index {
                prop_assert!(lo.index.is_some_and(|l| l <= h));
            }
        }

        #[test]
        fn collinear_points_have_zero_curvature(a in -10.0f64..10.0, b in -10.0f64..10.0, n in 3usize..50) {
            let x = grid(n);
            let y = x.iter().map(|t| a * t + b).collect();
            let k = discrete_curvature(&Curve::new(x, y).unwrap());
            prop_assert!(k.iter().all(|&v| v == 0.0));
        }
    }
}
