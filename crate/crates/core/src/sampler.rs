//! Synthetic return series.
//!
//! Time is cut into epochs; at each epoch start the width schedule restarts
//! from a_0 = 1 and the volatility state is redrawn. Each epoch consumes its
//! own random stream (stream id = epoch index), so a series is a pure
//! function of `(seed, params, mode, length)`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::model::predictive::predictive_law;
use crate::model::{EpochMode, Model, ModelParams, ScaleMixture};
use crate::rng::{StreamRng, SCHEDULE_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// One latent σ per epoch, r = σ a_φ ε.
    Latent,
    /// Each return drawn from the predictive law given the previous
    /// min(m, φ) returns of its epoch.
    #[default]
    Conditional,
}

/// Epoch boundaries covering a series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSchedule {
    pub mode: EpochMode,
    pub tau_c: usize,
    /// Sorted epoch start indices; always begins with 0.
    pub starts: Vec<usize>,
    pub length: usize,
}

impl EpochSchedule {
    /// Realized epoch lengths; the last one may be truncated by the series end.
    pub fn lengths(&self) -> Vec<usize> {
        self.starts
            .iter()
            .zip(self.starts.iter().skip(1).chain(core::iter::once(&self.length)))
            .map(|(a, b)| b - a)
            .collect()
    }
}

pub fn build_schedule(length: usize, params: &ModelParams, seed: u64) -> Result<EpochSchedule> {
    if length < 1 {
        return Err(domain("length", 0.0));
    }
    let tau_c = params.tau_c();
    let starts = match params.epoch_mode() {
        EpochMode::Fixed => (0..length).step_by(tau_c).collect(),
        EpochMode::Geometric => {
            let mut rng = StreamRng::new(seed, SCHEDULE_STREAM);
            let mut starts = Vec::new();
            let mut t = 0usize;
            while t < length {
                starts.push(t);
                t = t.saturating_add(rng.geometric(tau_c as f64) as usize);
            }
            starts
        }
    };
    Ok(EpochSchedule { mode: params.epoch_mode(), tau_c, starts, length })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesMeta {
    pub seed: u64,
    pub params: ModelParams,
    pub mode: SamplingMode,
}

/// Unit-interval log returns with their epoch boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub returns: Vec<f64>,
    pub epoch_starts: Vec<usize>,
    pub meta: SeriesMeta,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

pub fn sample(length: usize, params: &ModelParams, seed: u64, mode: SamplingMode) -> Result<ReturnSeries> {
    match mode {
        SamplingMode::Latent => sample_latent(length, params, seed),
        SamplingMode::Conditional => sample_conditional(length, params, seed),
    }
}

pub fn sample_latent(length: usize, params: &ModelParams, seed: u64) -> Result<ReturnSeries> {
    sample_latent_with(&Model::new(*params), length, seed)
}

/// Latent sampler for an arbitrary scale mixture.
pub fn sample_latent_with<G: ScaleMixture>(model: &Model<G>, length: usize, seed: u64) -> Result<ReturnSeries> {
    let params = *model.params();
    let schedule = build_schedule(length, &params, seed)?;
    let lengths = schedule.lengths();
    let unit = model.widths().unit_widths(lengths.iter().copied().max().unwrap_or(0));
    let mut returns = Vec::with_capacity(length);
    for (epoch, &len) in lengths.iter().enumerate() {
        let mut rng = StreamRng::new(seed, epoch as u64);
        let sigma = model.scaling().sample_sigma(&mut rng);
        returns.extend(unit[..len].iter().map(|a| sigma * a * rng.normal()));
    }
    Ok(ReturnSeries {
        returns,
        epoch_starts: schedule.starts,
        meta: SeriesMeta { seed, params, mode: SamplingMode::Latent },
    })
}

/// Windowed conditional sampler with depth m = `params.window()` (m ≥ 1).
/// The window is cleared at every epoch start.
pub fn sample_conditional(length: usize, params: &ModelParams, seed: u64) -> Result<ReturnSeries> {
    let depth = params.window();
    if depth < 1 {
        return Err(domain("window", 0.0));
    }
    let model = Model::new(*params);
    let g = *model.scaling();
    let schedule = build_schedule(length, params, seed)?;
    let lengths = schedule.lengths();
    let unit = model.widths().unit_widths(lengths.iter().copied().max().unwrap_or(0));
    let mut returns = Vec::with_capacity(length);
    let mut window: VecDeque<f64> = VecDeque::with_capacity(depth);
    for (epoch, &len) in lengths.iter().enumerate() {
        let mut rng = StreamRng::new(seed, epoch as u64);
        window.clear();
        for a in &unit[..len] {
            let sum_sq: f64 = window.iter().map(|z| z * z).sum();
            let law = predictive_law(&g, window.len(), sum_sq, *a);
            let r = law.scale * rng.student_t(law.nu);
            if window.len() == depth {
                window.pop_front();
            }
            window.push_back(r / a);
            returns.push(r);
        }
    }
    Ok(ReturnSeries {
        returns,
        epoch_starts: schedule.starts,
        meta: SeriesMeta { seed, params: *params, mode: SamplingMode::Conditional },
    })
}

/// Price path S(0) = `initial`, S(t+1) = S(t)·exp(r_t).
pub fn prices_from_returns(returns: &[f64], initial: f64) -> Result<Vec<f64>> {
    if !(initial > 0.0) || !initial.is_finite() {
        return Err(Error::NonPositivePrice { index: 0, value: initial });
    }
    let mut prices = Vec::with_capacity(returns.len() + 1);
    let mut s = initial;
    prices.push(s);
    for r in returns {
        s *= libm::exp(*r);
        prices.push(s);
    }
    Ok(prices)
}
