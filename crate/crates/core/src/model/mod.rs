//! Analytic objects of the model: widths, marginal densities, the joint
//! characteristic function and the conditional laws used by the samplers.
//!
//! Within one epoch the joint characteristic function of n consecutive unit
//! returns is ĝ(√(Σ a_i² k_i²)), which is the law of r_i = σ a_i ε_i with a
//! single latent σ per epoch and independent standard normal ε_i. Every
//! closed form below is a consequence of that representation.

mod params;
pub(crate) mod predictive;
mod scaling;
mod width;

pub use params::{EpochMode, ModelParams};
pub use predictive::{BinConditional, ConditionalPair};
pub use scaling::{Gaussian, ScaleMixture, StudentT};
pub use width::{interval_width, renorm_factor, WidthSchedule};

use crate::error::{domain, Result};

/// Model parameters bound to a scaling function.
#[derive(Debug, Clone, Copy)]
pub struct Model<G = StudentT> {
    params: ModelParams,
    scaling: G,
    widths: WidthSchedule,
}

impl Model<StudentT> {
    pub fn new(params: ModelParams) -> Self {
        Self { scaling: params.scaling_function(), widths: params.widths(), params }
    }
}

impl<G: ScaleMixture> Model<G> {
    /// Replaces the Student-t scaling function implied by `params`; the `nu`
    /// and `scale` fields of `params` are then ignored.
    pub fn with_scaling(params: ModelParams, scaling: G) -> Self {
        Self { scaling, widths: params.widths(), params }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn scaling(&self) -> &G {
        &self.scaling
    }

    pub fn widths(&self) -> &WidthSchedule {
        &self.widths
    }

    /// p_{t,T}(r) = g(r / w(t,T)) / w(t,T).
    pub fn interval_density(&self, r: f64, t: f64, dur: f64) -> Result<f64> {
        let w = self.checked_width(t, dur)?;
        Ok(self.scaling.density(r / w) / w)
    }

    pub fn interval_cdf(&self, r: f64, t: f64, dur: f64) -> Result<f64> {
        let w = self.checked_width(t, dur)?;
        Ok(self.scaling.cdf(r / w))
    }

    /// Time-averaged density p̄_T(r) = (1/τ_c) Σ_{t<τ_c} p_{t,T}(r).
    pub fn averaged_density(&self, r: f64, dur: f64) -> Result<f64> {
        self.checked_width(0.0, dur)?;
        let tau_c = self.params.tau_c();
        let sum: f64 = (0..tau_c)
            .map(|t| {
                let w = self.widths.width(t as f64, dur);
                self.scaling.density(r / w) / w
            })
            .sum();
        Ok(sum / tau_c as f64)
    }

    pub fn averaged_cdf(&self, r: f64, dur: f64) -> Result<f64> {
        self.checked_width(0.0, dur)?;
        let tau_c = self.params.tau_c();
        let sum: f64 = (0..tau_c).map(|t| self.scaling.cdf(r / self.widths.width(t as f64, dur))).sum();
        Ok(sum / tau_c as f64)
    }

    /// Second moment of p̄_T from the telescoped sum
    /// (μ₂/τ_c) Σ_{j<T} [(τ_c+j)^{2D} − j^{2D}].
    pub fn averaged_second_moment(&self, dur: usize) -> Result<f64> {
        if dur < 1 {
            return Err(domain("T", dur as f64));
        }
        let tau_c = self.params.tau_c() as f64;
        let mu2 = self.scaling.abs_moment(2.0)?;
        let sum: f64 = (0..dur).map(|j| self.widths.width_squared(j as f64, tau_c)).sum();
        Ok(mu2 * sum / tau_c)
    }

    /// Joint characteristic function of `k.len()` consecutive unit returns
    /// starting at epoch position `t0`: ĝ(√(Σ_i a_{t0+i}² k_i²)).
    pub fn joint_char_fn(&self, k: &[f64], t0: usize) -> Result<f64> {
        if k.is_empty() {
            return Err(domain("k.len()", 0.0));
        }
        let norm2: f64 = k
            .iter()
            .enumerate()
            .map(|(i, ki)| self.widths.width_squared((t0 + i) as f64, 1.0) * ki * ki)
            .sum();
        Ok(self.scaling.char_fn(libm::sqrt(norm2)))
    }

    fn checked_width(&self, t: f64, dur: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain("t", t));
        }
        if !(dur >= 1.0) {
            return Err(domain("T", dur));
        }
        Ok(self.widths.width(t, dur))
    }
}
