use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::model::params::check_exponent;

/// Interval width factor w(t, T) = √((t+T)^{2D} − t^{2D}).
///
/// Defined for real `t ≥ 0` and `T > 0`; samplers only use the integer grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthSchedule {
    pub(crate) d: f64,
}

impl WidthSchedule {
    pub fn new(d: f64) -> Result<Self> {
        check_exponent(d)?;
        Ok(Self { d })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Squared width w(t, T)², evaluated without cancellation for large `t`.
    pub fn width_squared(&self, t: f64, dur: f64) -> f64 {
        let two_d = 2.0 * self.d;
        if t == 0.0 {
            libm::pow(dur, two_d)
        } else {
            libm::pow(t, two_d) * libm::expm1(two_d * libm::log1p(dur / t))
        }
    }

    pub fn width(&self, t: f64, dur: f64) -> f64 {
        libm::sqrt(self.width_squared(t, dur))
    }

    /// Unit-step width a_φ = w(φ, 1).
    pub fn unit(&self, phase: usize) -> f64 {
        self.width(phase as f64, 1.0)
    }

    /// a_0, ..., a_{n-1}.
    pub fn unit_widths(&self, n: usize) -> Vec<f64> {
        (0..n).map(|p| self.unit(p)).collect()
    }
}

/// w(t, T) with the operation's domain checks (`T ≥ 1`, `0 < D ≤ 1/2`).
pub fn interval_width(t: f64, dur: f64, d: f64) -> Result<f64> {
    check_exponent(d)?;
    if !(t >= 0.0) {
        return Err(domain("t", t));
    }
    if !(dur >= 1.0) {
        return Err(domain("T", dur));
    }
    Ok(WidthSchedule { d }.width(t, dur))
}

/// Renormalization factor a = (2^{2D} − 1)^{1/(2D)}, which maps the marginal
/// of the second of two adjacent intervals onto an effective first interval:
/// w(T, T) = w(0, aT).
pub fn renorm_factor(d: f64) -> Result<f64> {
    check_exponent(d)?;
    Ok(libm::pow(libm::exp2(2.0 * d) - 1.0, 1.0 / (2.0 * d)))
}
