//! Inhomogeneous-time scaling model of index returns.
//!
//! The crate is `no_std` (it needs `alloc`) and carries everything that is
//! pure computation:
//!
//! | Module       | Contents                                                             |
//! |--------------|----------------------------------------------------------------------|
//! | [`model`]    | parameters, scaling function, width schedule, densities, predictive   |
//! | [`sampler`]  | epoch schedules, latent and windowed-conditional samplers             |
//! | [`analysis`] | estimators for return series: collapse, moments, c(τ), conditionals   |
//! | [`theory`]   | time-averaged predictions and calibration                             |
//! | [`stats`]    | least squares, Kolmogorov-Smirnov tests, sample moments               |
//! | [`rng`]      | seeded ChaCha streams and the variate generators built on them        |
//!
//! File formats, the command line and parallel grid evaluation live in the
//! `itscale` crate.

#![no_std]
// `!(x > 0.0)` is how NaN gets rejected throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod error;
pub mod model;
pub mod optim;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use sampler::{ReturnSeries, SamplingMode};
pub use model::{
    renorm_factor, interval_width, EpochMode, Model, ModelParams, ScaleMixture, StudentT,
    WidthSchedule,
};

