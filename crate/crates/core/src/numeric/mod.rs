//! Numerical building blocks: adaptive quadrature and a few special functions.

pub mod quadrature;
pub mod special;

pub use quadrature::{integrate, integrate_to_infinity, try_integrate, CancelToken, QuadOptions};
