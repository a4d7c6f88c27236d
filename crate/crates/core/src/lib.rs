//! Outage and capacity analysis of fluid antenna systems (FAS) through the
//! equivalent degrees of freedom (EDoF) of the Jakes spatial correlation.
//!
//! A linear FAS with normalized aperture `W` has `K* = 2⌈W⌉ + 1` significant
//! spatial eigenmodes regardless of its port count. The closed forms in
//! [`closedform`] and [`fama`] treat the antenna as selection combining over
//! `K*` independent Rayleigh branches; [`montecarlo`] generates exact
//! correlated-channel baselines to check them against.
//!
//! All library quantities are linear scale. Use [`db_to_linear`] at the edges.

pub mod closedform;
pub mod correlation;
pub mod error;
pub mod fama;
pub mod geometry;
pub mod montecarlo;
pub mod specfun;

pub use error::{Error, Result};

/// `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log10(linear)`.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
