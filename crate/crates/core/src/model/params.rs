use crate::error::{domain, Result};
use crate::model::{StudentT, WidthSchedule};

/// How epoch lengths are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpochMode {
    /// Every epoch lasts exactly `tau_c` steps.
    #[default]
    Fixed,
    /// Epoch lengths are geometric on {1, 2, ...} with mean `tau_c`.
    Geometric,
}

/// Parameters of the stochastic model.
///
/// Construction validates every field, so holders of a `ModelParams` never
/// re-check the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    d: f64,
    tau_c: usize,
    epoch_mode: EpochMode,
    window: usize,
    nu: f64,
    scale: f64,
}

impl ModelParams {
    /// Fixed epochs and an empty conditioning window; see [`Self::with_window`].
    pub fn new(d: f64, tau_c: usize, nu: f64, scale: f64) -> Result<Self> {
        check_exponent(d)?;
        if tau_c < 1 {
            return Err(domain("tau_c", tau_c as f64));
        }
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(domain("nu", nu));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(domain("scale", scale));
        }
        Ok(Self { d, tau_c, epoch_mode: EpochMode::Fixed, window: 0, nu, scale })
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_epoch_mode(mut self, mode: EpochMode) -> Self {
        self.epoch_mode = mode;
        self
    }

    pub fn with_scale(self, scale: f64) -> Result<Self> {
        Self::new(self.d, self.tau_c, self.nu, scale)
            .map(|p| p.with_window(self.window).with_epoch_mode(self.epoch_mode))
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn tau_c(&self) -> usize {
        self.tau_c
    }

    pub fn epoch_mode(&self) -> EpochMode {
        self.epoch_mode
    }

    /// Conditioning depth m of the windowed sampler.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn scaling_function(&self) -> StudentT {
        StudentT { nu: self.nu, scale: self.scale }
    }

    pub fn widths(&self) -> WidthSchedule {
        WidthSchedule { d: self.d }
    }
}

pub(crate) fn check_exponent(d: f64) -> Result<()> {
    if d > 0.0 && d <= 0.5 {
        Ok(())
    } else {
        Err(domain("D", d))
    }
}
