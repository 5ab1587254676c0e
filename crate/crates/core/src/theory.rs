//! Time-averaged predictions of the model and calibration against a series.
//!
//! Averages over the epoch phase t ∈ [0, τ_c) stand in for the sampling of
//! a long record by translated intervals.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::analysis::{autocorr_report, check_moment_request, detrend, moment_exponents, volatility_autocorr, AutocorrReport, MomentGuard};
use crate::error::{domain, Error, Result};
use crate::model::{EpochMode, Model, ModelParams, ScaleMixture, StudentT, WidthSchedule};
use crate::optim::{golden_section, nelder_mead};
use crate::special::ln_gamma;
use crate::stats::{abs_moment, log_log_fit, LinearFit};

/// (1/τ_c) Σ_{t<τ_c} w(t,T)^q.
pub fn width_moment_sum(q: f64, dur: usize, widths: &WidthSchedule, tau_c: usize) -> f64 {
    let half = 0.5 * q;
    let dur = dur as f64;
    let sum: f64 = (0..tau_c).map(|t| libm::pow(widths.width_squared(t as f64, dur), half)).sum();
    sum / tau_c as f64
}

/// S_q(T) = μ_q (1/τ_c) Σ_{t<τ_c} w(t,T)^q.
pub fn theoretical_moment(q: f64, dur: usize, params: &ModelParams) -> Result<f64> {
    if dur < 1 {
        return Err(domain("T", 0.0));
    }
    let mu = params.scaling_function().abs_moment(q)?;
    Ok(mu * width_moment_sum(q, dur, &params.widths(), params.tau_c()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryMomentCurve {
    pub q: f64,
    pub durations: Vec<usize>,
    pub values: Vec<f64>,
    pub fit: LinearFit,
    /// OLS slope of ln S_q on ln T.
    pub exponent: f64,
}

pub fn theoretical_moment_curve(q: f64, durations: &[usize], params: &ModelParams) -> Result<TheoryMomentCurve> {
    let values = durations.iter().map(|t| theoretical_moment(q, *t, params)).collect::<Result<Vec<_>>>()?;
    let ts: Vec<f64> = durations.iter().map(|t| *t as f64).collect();
    let fit = log_log_fit(&ts, &values)?;
    Ok(TheoryMomentCurve { q, durations: durations.to_vec(), values, exponent: fit.slope, fit })
}

/// Regression exponent of S_q(T) from the width sums alone. μ_q only shifts
/// ln S_q, so this needs no tail parameter and accepts any q > 0.
pub fn width_exponent(q: f64, durations: &[usize], d: f64, tau_c: usize) -> Result<LinearFit> {
    if !(q > 0.0) {
        return Err(domain("q", q));
    }
    if tau_c < 1 {
        return Err(domain("tau_c", 0.0));
    }
    if durations.iter().any(|t| *t < 1) {
        return Err(domain("T", 0.0));
    }
    let widths = WidthSchedule::new(d)?;
    let ts: Vec<f64> = durations.iter().map(|t| *t as f64).collect();
    let sums: Vec<f64> = durations.iter().map(|t| width_moment_sum(q, *t, &widths, tau_c)).collect();
    log_log_fit(&ts, &sums)
}

/// Large-τ_c limit min(q/2, 1 + qD) of the exponent of S_q(T) for T ≪ τ_c.
pub fn asymptotic_exponent(q: f64, d: f64) -> Result<f64> {
    WidthSchedule::new(d)?;
    if !(q > 0.0) {
        return Err(domain("q", q));
    }
    Ok((0.5 * q).min(1.0 + q * d))
}

/// Order q* = 2 / (1 − 2D) where the two branches meet; infinite at D = 1/2.
pub fn crossover_order(d: f64) -> Result<f64> {
    WidthSchedule::new(d)?;
    Ok(if d >= 0.5 { f64::INFINITY } else { 2.0 / (1.0 - 2.0 * d) })
}

/// Collapsed time-averaged density ḡ_T(x) = T^{1/2} p̄_T(x T^{1/2}).
pub fn gbar_scaling_function(x: f64, dur: f64, params: &ModelParams) -> Result<f64> {
    let root = libm::sqrt(dur);
    Ok(root * Model::new(*params).averaged_density(x * root, dur)?)
}

/// Population analog of the c(τ) estimator for fixed epochs, with the phase
/// of t uniform on [0, τ_c).
#[derive(Debug, Clone)]
pub struct AutocorrModel {
    unit: Vec<f64>,
    mean_abs: f64,
    denominator: f64,
    same_epoch: f64,
    cross_epoch: f64,
}

impl AutocorrModel {
    pub fn new<G: ScaleMixture>(model: &Model<G>) -> Result<Self> {
        let params = model.params();
        if params.epoch_mode() != EpochMode::Fixed {
            return Err(Error::Unsupported("closed-form c(tau) needs fixed epochs"));
        }
        let tau_c = params.tau_c();
        let unit = model.widths().unit_widths(tau_c);
        let e1 = model.scaling().mixing_mean();
        let e2 = model.scaling().mixing_second_moment();
        if !e2.is_finite() || !e1.is_finite() {
            return Err(domain("nu", params.nu()));
        }
        let n = tau_c as f64;
        let mean_a = unit.iter().sum::<f64>() / n;
        let mean_a2 = unit.iter().map(|a| a * a).sum::<f64>() / n;
        let mean_abs = libm::sqrt(2.0 / PI) * e1 * mean_a;
        let denominator = e2 * mean_a2 - mean_abs * mean_abs;
        if !(denominator > 0.0) {
            return Err(Error::Degenerate("zero variance of |r|"));
        }
        Ok(Self { unit, mean_abs, denominator, same_epoch: 2.0 / PI * e2, cross_epoch: 2.0 / PI * e1 * e1 })
    }

    /// c(τ); E|r_t||r_{t+τ}| uses E[σ²] when both times share an epoch and
    /// E[σ]² otherwise.
    pub fn at(&self, lag: usize) -> f64 {
        if lag == 0 {
            return 1.0;
        }
        let tau_c = self.unit.len();
        let shift = lag % tau_c;
        let mut same = 0.0;
        let mut cross = 0.0;
        for (phase, a) in self.unit.iter().enumerate() {
            let b = self.unit[(phase + shift) % tau_c];
            if phase + lag < tau_c {
                same += a * b;
            } else {
                cross += a * b;
            }
        }
        let joint = (self.same_epoch * same + self.cross_epoch * cross) / tau_c as f64;
        (joint - self.mean_abs * self.mean_abs) / self.denominator
    }
}

/// Model c(τ) for τ = 0..=max_lag and its power-law fit over `fit_range`.
pub fn model_autocorr(max_lag: usize, params: &ModelParams, fit_range: (usize, usize)) -> Result<AutocorrReport> {
    model_autocorr_with(&Model::new(*params), max_lag, fit_range)
}

pub fn model_autocorr_with<G: ScaleMixture>(model: &Model<G>, max_lag: usize, fit_range: (usize, usize)) -> Result<AutocorrReport> {
    if fit_range.0 < 1 || fit_range.1 <= fit_range.0 || fit_range.1 > max_lag {
        return Err(domain("fit range end", fit_range.1 as f64));
    }
    let m = AutocorrModel::new(model)?;
    autocorr_report((0..=max_lag).map(|t| m.at(t)).collect(), fit_range)
}

/// How τ_c is chosen during calibration.
#[derive(Debug, Clone, PartialEq)]
pub enum TauCChoice {
    Fixed(usize),
    /// Every candidate is calibrated; the lowest D-objective wins.
    Grid(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub qs: Vec<f64>,
    pub durations: Vec<usize>,
    pub tau_c: TauCChoice,
    /// Weight of (β_emp − β_model)² in the D objective; 0 means moments only.
    pub beta_weight: f64,
    pub beta_fit_range: (usize, usize),
    pub d_step: f64,
    pub max_iter: usize,
    /// Relative change of the objective that ends the (ν, s) / D alternation.
    pub tol: f64,
    /// Phases whose unit widths differ by less than this relative amount
    /// share one term of p̄_1 in the likelihood.
    pub phase_tolerance: f64,
    pub detrend: bool,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            qs: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            durations: (1..=25).collect(),
            tau_c: TauCChoice::Fixed(500),
            beta_weight: 0.0,
            beta_fit_range: (1, 100),
            d_step: 0.01,
            max_iter: 50,
            tol: 1e-6,
            phase_tolerance: 1e-2,
            detrend: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationDiagnostics {
    pub empirical_exponents: Vec<f64>,
    pub theory_exponents: Vec<f64>,
    /// Empirical minus theory, per q.
    pub exponent_residuals: Vec<f64>,
    /// NaN when the series is too short for the lag range.
    pub empirical_beta: f64,
    pub model_beta: f64,
    pub beta_residual: f64,
    /// Of the unit returns under p̄_1 at the fitted parameters.
    pub log_likelihood: f64,
    /// Fitted D sits at the stationary boundary 1/2.
    pub d_at_boundary: bool,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub d: f64,
    pub nu: f64,
    pub scale: f64,
    pub tau_c: usize,
    /// D objective at the fitted parameters.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: CalibrationDiagnostics,
}

impl CalibrationResult {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.d, self.tau_c, self.nu, self.scale)
    }
}

struct Targets {
    exponents: Vec<f64>,
    beta: f64,
}

/// Fits (D, ν, s) and, on a grid, τ_c, by alternating a maximum-likelihood
/// fit of (ν, s) under p̄_1 with a least-squares fit of D to the moment
/// exponents (plus the weighted β residual).
pub fn calibrate(unit: &[f64], options: &CalibrationOptions) -> Result<CalibrationResult> {
    check_moment_request(&options.qs, &options.durations, MomentGuard::Cap(f64::INFINITY))?;
    if !(options.d_step > 0.0 && options.d_step <= 0.5) {
        return Err(domain("d_step", options.d_step));
    }
    if !(options.beta_weight >= 0.0) {
        return Err(domain("beta_weight", options.beta_weight));
    }
    let (series, drift) = if options.detrend { detrend(unit)? } else { (unit.to_vec(), 0.0) };
    let rms = libm::sqrt(abs_moment(&series, 2.0));
    if !(rms > 0.0) {
        return Err(Error::Degenerate("zero-variance returns"));
    }
    // no q < ν guard: μ_q drops out of every slope in the objective
    let report = moment_exponents(&series, &options.qs, &options.durations, MomentGuard::Cap(f64::INFINITY))?;
    let beta = match volatility_autocorr(&series, options.beta_fit_range.1, options.beta_fit_range) {
        Ok(r) => r.beta,
        Err(e) if options.beta_weight > 0.0 => return Err(e),
        Err(_) => f64::NAN,
    };
    let targets = Targets { exponents: report.exponents.iter().map(|e| e.exponent).collect(), beta };
    let standardized: Vec<f64> = series.iter().map(|r| r / rms).collect();

    let candidates = match &options.tau_c {
        TauCChoice::Fixed(t) => vec![*t],
        TauCChoice::Grid(g) => g.clone(),
    };
    if candidates.is_empty() || candidates.iter().any(|t| *t < 1) {
        return Err(domain("tau_c", 0.0));
    }
    let mut best: Option<CalibrationResult> = None;
    for tau_c in candidates {
        let mut fit = calibrate_at(&standardized, tau_c, &targets, options)?;
        fit.scale *= rms;
        fit.diagnostics.drift = drift;
        if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one tau_c candidate"))
}

fn calibrate_at(x: &[f64], tau_c: usize, targets: &Targets, options: &CalibrationOptions) -> Result<CalibrationResult> {
    let mut d = 0.5;
    let mut nu = 4.0;
    let mut scale = f64::NAN;
    let mut log_likelihood = f64::NAN;
    let mut objective = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let ml = fit_nu_scale(x, d, tau_c, nu, options.phase_tolerance)?;
        nu = ml.nu;
        scale = ml.scale;
        log_likelihood = ml.log_likelihood;
        let (d_new, obj) = fit_d(tau_c, nu, targets, options)?;
        let settled = objective.is_finite() && (obj - objective).abs() <= options.tol * objective.abs() && d_new == d;
        d = d_new;
        objective = obj;
        if settled && ml.converged {
            converged = true;
            break;
        }
    }
    let theory_exponents = options
        .qs
        .iter()
        .map(|q| width_exponent(*q, &options.durations, d, tau_c).map(|f| f.slope))
        .collect::<Result<Vec<_>>>()?;
    let model_beta = model_beta(d, tau_c, nu, options.beta_fit_range)?;
    let diagnostics = CalibrationDiagnostics {
        exponent_residuals: targets.exponents.iter().zip(&theory_exponents).map(|(e, t)| e - t).collect(),
        empirical_exponents: targets.exponents.clone(),
        theory_exponents,
        empirical_beta: targets.beta,
        model_beta,
        beta_residual: targets.beta - model_beta,
        log_likelihood,
        d_at_boundary: d >= 0.5 - 0.5 * options.d_step,
        drift: 0.0,
    };
    Ok(CalibrationResult { d, nu, scale, tau_c, objective, iterations, converged, diagnostics })
}

fn model_beta(d: f64, tau_c: usize, nu: f64, fit_range: (usize, usize)) -> Result<f64> {
    let params = ModelParams::new(d, tau_c, nu, 1.0)?;
    Ok(model_autocorr(fit_range.1, &params, fit_range)?.beta)
}

/// D objective Σ_q (emp − theory)² + w_β (β_emp − β_model)².
fn d_objective(d: f64, tau_c: usize, nu: f64, targets: &Targets, options: &CalibrationOptions) -> Result<f64> {
    let mut j = 0.0;
    for (q, emp) in options.qs.iter().zip(&targets.exponents) {
        let th = width_exponent(*q, &options.durations, d, tau_c)?.slope;
        j += (emp - th) * (emp - th);
    }
    if options.beta_weight > 0.0 {
        let b = model_beta(d, tau_c, nu, options.beta_fit_range)?;
        j += options.beta_weight * (targets.beta - b) * (targets.beta - b);
    }
    Ok(j)
}

fn fit_d(tau_c: usize, nu: f64, targets: &Targets, options: &CalibrationOptions) -> Result<(f64, f64)> {
    let steps = libm::floor(0.5 / options.d_step + 1e-9) as usize;
    let mut grid: Vec<f64> = (1..=steps).map(|k| k as f64 * options.d_step).collect();
    if grid.last().is_none_or(|d| *d < 0.5) {
        grid.push(0.5);
    }
    let mut best = (grid[0], f64::INFINITY);
    for &d in &grid {
        let j = d_objective(d, tau_c, nu, targets, options)?;
        if j < best.1 {
            best = (d, j);
        }
    }
    let lo = (best.0 - options.d_step).max(1e-6);
    let hi = (best.0 + options.d_step).min(0.5);
    let (d, j) = golden_section(
        |d| d_objective(d, tau_c, nu, targets, options).unwrap_or(f64::INFINITY),
        lo,
        hi,
        1e-7,
    );
    Ok(if j < best.1 { (d, j) } else { best })
}

struct MlFit {
    nu: f64,
    scale: f64,
    log_likelihood: f64,
    converged: bool,
}

/// (weight, representative unit width) groups of the phases 0..τ_c.
fn phase_groups(d: f64, tau_c: usize, tolerance: f64) -> Result<Vec<(f64, f64)>> {
    let a = WidthSchedule::new(d)?.unit_widths(tau_c);
    let mut groups = Vec::new();
    let mut start = 0;
    while start < tau_c {
        let mut end = start + 1;
        while end < tau_c && a[start] <= a[end] * (1.0 + tolerance) {
            end += 1;
        }
        let k = (end - start) as f64;
        let mean_sq = a[start..end].iter().map(|v| v * v).sum::<f64>() / k;
        groups.push((k / tau_c as f64, libm::sqrt(mean_sq)));
        start = end;
    }
    Ok(groups)
}

/// Σ ln p̄_1(x_i) for Student-t(ν, s) scaling.
fn log_likelihood(x: &[f64], groups: &[(f64, f64)], nu: f64, scale: f64) -> f64 {
    let g = StudentT { nu, scale };
    let ln_norm = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * libm::log(nu * PI);
    let norm = libm::exp(ln_norm);
    let coef: Vec<(f64, f64)> = groups
        .iter()
        .map(|(w, a)| (w * norm / (g.scale * a), 1.0 / (nu * g.scale * g.scale * a * a)))
        .collect();
    let h = -0.5 * (nu + 1.0);
    x.iter()
        .map(|r| {
            let r2 = r * r;
            let p: f64 = coef.iter().map(|(c, b)| c * libm::exp(h * libm::log1p(r2 * b))).sum();
            libm::log(p)
        })
        .sum()
}

fn fit_nu_scale(x: &[f64], d: f64, tau_c: usize, nu0: f64, tolerance: f64) -> Result<MlFit> {
    let groups = phase_groups(d, tau_c, tolerance)?;
    let mean_a2: f64 = groups.iter().map(|(w, a)| w * a * a).sum();
    let second = abs_moment(x, 2.0);
    let s0 = libm::sqrt(second * (nu0 - 2.0) / (nu0 * mean_a2));
    let nll = |p: &[f64]| {
        if p[0] > 9.0 || p[0] < -12.0 {
            return f64::INFINITY;
        }
        -log_likelihood(x, &groups, 2.0 + libm::exp(p[0]), libm::exp(p[1]))
    };
    let m = nelder_mead(nll, &[libm::log(nu0 - 2.0), libm::log(s0)], 0.3, 1e-7, 1e-12, 400);
    Ok(MlFit {
        nu: 2.0 + libm::exp(m.x[0]),
        scale: libm::exp(m.x[1]),
        log_likelihood: -m.value,
        converged: m.converged,
    })
}
