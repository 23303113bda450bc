//! Outliers defined through ratios of partial sums of order statistics.
//!
//! For a nonnegative sample sorted as `x(1) <= … <= x(n)` the R-statistic
//! `R_m = S_m / T_{n-m}` compares the sum of the bottom `m` values with the
//! sum of the top `n - m`. The crate provides
//!
//! * [`sample`]: sorted samples, the R-series, the κ-outlier count and
//!   threshold-based flagging;
//! * [`exact`]: the distribution of `S_{m-1}/T_{n-m}` via conditional
//!   convolutions, the hypoexponential machinery for the exponential parent
//!   and the two-sided approximation bounds for `S_m/T_{n-m}`;
//! * [`sampler`]: seedable samplers for exponential, half-normal, Pareto,
//!   Lomax and identified-outlier models;
//! * [`harness`]: Monte Carlo summaries of `R_m` and per-sample R-curves;
//! * [`kneedle`]: curvature helpers and knee detection for choosing κ;
//! * [`tails`]: the two-Pareto-tails discrimination experiment.

// negated comparisons route NaN to the error branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod harness;
pub mod kneedle;
pub mod numeric;
pub mod par;
pub mod sample;
pub mod sampler;
pub mod tails;

pub use error::{Error, Result};
pub use par::Workers;
pub use sample::{OutlierReport, RatioSeries, SortedSample};
pub use sampler::{DistributionSpec, SeedPolicy};
