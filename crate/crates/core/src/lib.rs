//! Coverage and capacity engine for downlink cell-free massive-MIMO LEO
//! satellite networks.
//!
//! Satellite access points (SAPs) and user terminals (UTs) are modelled as
//! homogeneous Poisson point processes on two concentric spheres. Every
//! quantity of interest is computed two ways:
//!
//! - [`analytic`]: Laplace-functional of the desired-signal amplitude,
//!   Euler-summed Bromwich inversion, average interference in closed form,
//!   coverage probability and ergodic capacity.
//! - [`montecarlo`]: snapshot simulation with Nakagami-m fading, optional
//!   uplink pilot training, conjugate beamforming and the nearest-satellite
//!   baseline.
//!
//! [`constellation`] generates Walker-style shells for checking how well the
//! Poisson model describes a deterministic mega-constellation.
//!
//! All lengths are kilometres, areas km², densities per km². Powers and gains
//! are linear; decibel values are converted once at configuration time.

// `!(x > 0.0)` style checks are there to reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channel;
pub mod config;
pub mod constellation;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod specfun;

pub use config::NetworkConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use error::{Error, Result};

/// Converts a decibel value to a linear ratio.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear ratio to decibels.
#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Converts a dBm power level to watts.
#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}
