//! Estimators applied to a return series, synthetic or ingested.
//!
//! Aggregated returns always come from overlapping windows of unit returns,
//! each window summed directly. Conditional pairs are the one exception:
//! they use successive non-overlapping blocks.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::stats::{log_log_fit, mean, variance, LinearFit};

/// r(t, T) = ln S(t+T) − ln S(t) for t = 0, 1, ..., len − T − 1.
pub fn log_returns(prices: &[f64], dur: usize) -> Result<Vec<f64>> {
    if dur < 1 {
        return Err(domain("T", 0.0));
    }
    if let Some((index, &value)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0) || !p.is_finite()) {
        return Err(Error::NonPositivePrice { index, value });
    }
    if prices.len() <= dur {
        return Err(Error::InsufficientData { needed: dur + 1, got: prices.len() });
    }
    let logs: Vec<f64> = prices.iter().map(|p| libm::log(*p)).collect();
    Ok(logs.windows(dur + 1).map(|w| w[dur] - w[0]).collect())
}

/// Overlapping window sums of `dur` unit returns (len − dur + 1 values).
pub fn aggregate(unit: &[f64], dur: usize) -> Result<Vec<f64>> {
    if dur < 1 {
        return Err(domain("T", 0.0));
    }
    if unit.len() < dur {
        return Err(Error::InsufficientData { needed: dur, got: unit.len() });
    }
    Ok(unit.windows(dur).map(|w| w.iter().sum()).collect())
}

/// Subtracts the sample mean; returns the detrended series and the drift.
pub fn detrend(returns: &[f64]) -> Result<(Vec<f64>, f64)> {
    if returns.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let drift = mean(returns);
    Ok((returns.iter().map(|r| r - drift).collect(), drift))
}

/// Histogram bin layout.
#[derive(Debug, Clone, PartialEq)]
pub enum Binning {
    /// Freedman–Diaconis width inside mean ± 3 sd, geometric tail bins
    /// outside, each tail edge `tail_ratio` times further from the mean.
    FreedmanDiaconis { tail_ratio: f64 },
    /// `bins` equal bins spanning the sample range.
    Uniform { bins: usize },
    /// Explicit strictly increasing edges; samples outside are dropped.
    Edges(Vec<f64>),
}

impl Default for Binning {
    fn default() -> Self {
        Binning::FreedmanDiaconis { tail_ratio: 1.5 }
    }
}

/// Histogram estimate of p̄_T.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    pub dur: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Number of samples inside the edges.
    pub samples: usize,
    pub mean: f64,
    pub std_dev: f64,
}

impl EmpiricalDistribution {
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.samples as f64;
        self.counts.iter().map(|c| *c as f64 / n).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn densities(&self) -> Vec<f64> {
        let n = self.samples as f64;
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(c, e)| *c as f64 / (n * (e[1] - e[0])))
            .collect()
    }

    /// Points (r / T^D̄, T^D̄ · p̄_T) of non-empty bins.
    pub fn collapsed(&self, d_bar: f64) -> Vec<(f64, f64)> {
        let k = libm::pow(self.dur as f64, d_bar);
        self.centers()
            .into_iter()
            .zip(self.densities())
            .filter(|(_, p)| *p > 0.0)
            .map(|(x, p)| (x / k, k * p))
            .collect()
    }
}

pub const MIN_PDF_SAMPLES: usize = 100;

pub fn empirical_pdf(returns: &[f64], dur: usize, binning: &Binning) -> Result<EmpiricalDistribution> {
    if returns.len() < MIN_PDF_SAMPLES {
        return Err(Error::InsufficientData { needed: MIN_PDF_SAMPLES, got: returns.len() });
    }
    let edges = bin_edges(returns, binning)?;
    let counts = histogram(returns, &edges);
    let samples = counts.iter().sum::<u64>() as usize;
    if samples == 0 {
        return Err(Error::Degenerate("no sample inside the bin edges"));
    }
    Ok(EmpiricalDistribution {
        dur,
        edges,
        counts,
        samples,
        mean: mean(returns),
        std_dev: libm::sqrt(variance(returns)),
    })
}

pub fn bin_edges(xs: &[f64], binning: &Binning) -> Result<Vec<f64>> {
    let sorted = sorted(xs);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let edges = match binning {
        Binning::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Degenerate("bin edges must be strictly increasing"));
            }
            e.clone()
        }
        _ if !(hi > lo) => return Err(Error::Degenerate("all samples equal")),
        Binning::Uniform { bins } => {
            if *bins < 1 {
                return Err(domain("bins", 0.0));
            }
            let h = (hi - lo) / *bins as f64;
            let mut e: Vec<f64> = (0..*bins).map(|i| lo + h * i as f64).collect();
            e.push(hi);
            e
        }
        Binning::FreedmanDiaconis { tail_ratio } => {
            if !(*tail_ratio > 1.0) {
                return Err(domain("tail_ratio", *tail_ratio));
            }
            fd_edges(&sorted, *tail_ratio)
        }
    };
    Ok(edges)
}

fn fd_edges(sorted: &[f64], ratio: f64) -> Vec<f64> {
    let n = sorted.len();
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let m = mean(sorted);
    let sd = libm::sqrt(variance(sorted));
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let mut h = 2.0 * iqr / libm::cbrt(n as f64);
    if !(h > 0.0) {
        h = (hi - lo) / libm::ceil(libm::sqrt(n as f64));
    }
    let c_lo = lo.max(m - 3.0 * sd);
    let c_hi = hi.min(m + 3.0 * sd);
    let bins = libm::ceil((c_hi - c_lo) / h).max(1.0) as usize;
    let h = (c_hi - c_lo) / bins as f64;
    let mut left = Vec::new();
    let mut d = m - c_lo;
    let mut edge = c_lo;
    while edge > lo {
        d *= ratio;
        edge = (m - d).max(lo).min(edge);
        left.push(edge);
    }
    left.reverse();
    let mut edges = left;
    edges.extend((0..bins).map(|i| c_lo + h * i as f64));
    edges.push(c_hi);
    let mut d = c_hi - m;
    let mut edge = c_hi;
    while edge < hi {
        d *= ratio;
        edge = (m + d).min(hi).max(edge);
        edges.push(edge);
    }
    edges.dedup();
    edges
}

/// Counts per bin; the last bin is closed on the right.
pub fn histogram(xs: &[f64], edges: &[f64]) -> Vec<u64> {
    let nb = edges.len() - 1;
    let mut counts = vec![0u64; nb];
    let (first, last) = (edges[0], edges[nb]);
    for &x in xs {
        if x < first || x > last || x.is_nan() {
            continue;
        }
        let i = edges.partition_point(|e| *e <= x).saturating_sub(1).min(nb - 1);
        counts[i] += 1;
    }
    counts
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = libm::floor(pos) as usize;
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[i] + (pos - i as f64) * (sorted[i + 1] - sorted[i])
}

/// Edges splitting `values` into `k` equally populated classes; the outer
/// edges are the sample extremes.
pub fn quantile_edges(values: &[f64], k: usize) -> Result<Vec<f64>> {
    if k < 1 || values.len() < k {
        return Err(Error::InsufficientData { needed: k.max(1), got: values.len() });
    }
    let s = sorted(values);
    Ok((0..=k).map(|i| quantile_sorted(&s, i as f64 / k as f64)).collect())
}

/// Simple-scaling collapse estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseFit {
    pub d_bar: f64,
    pub fit: LinearFit,
    pub durations: Vec<usize>,
    /// Root mean square of r(t, T) per duration.
    pub widths: Vec<f64>,
    pub distributions: Vec<EmpiricalDistribution>,
}

impl CollapseFit {
    pub fn collapsed_points(&self) -> Vec<Vec<(f64, f64)>> {
        self.distributions.iter().map(|d| d.collapsed(self.d_bar)).collect()
    }
}

/// D̄ from the OLS slope of ln rms(r_T) on ln T. The width is the raw root
/// mean square, so detrend first if the drift should not count.
pub fn collapse_fit(unit: &[f64], durations: &[usize], binning: &Binning) -> Result<CollapseFit> {
    check_durations(durations)?;
    let mut widths = Vec::with_capacity(durations.len());
    let mut distributions = Vec::with_capacity(durations.len());
    for &dur in durations {
        let r = aggregate(unit, dur)?;
        let rms = libm::sqrt(crate::stats::abs_moment(&r, 2.0));
        if !(rms > 0.0) {
            return Err(Error::Degenerate("zero-variance returns"));
        }
        widths.push(rms);
        distributions.push(empirical_pdf(&r, dur, binning)?);
    }
    let ts: Vec<f64> = durations.iter().map(|t| *t as f64).collect();
    let fit = log_log_fit(&ts, &widths)?;
    Ok(CollapseFit { d_bar: fit.slope, fit, durations: durations.to_vec(), widths, distributions })
}

fn check_durations(durations: &[usize]) -> Result<()> {
    if durations.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: durations.len() });
    }
    if durations.iter().any(|t| *t < 1) {
        return Err(domain("T", 0.0));
    }
    Ok(())
}

/// Moment orders allowed in a moment analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentGuard {
    /// Generating tail parameter known: every q must be below it.
    KnownNu(f64),
    /// Empirical data: every q must be at most the cap.
    Cap(f64),
}

impl Default for MomentGuard {
    fn default() -> Self {
        MomentGuard::Cap(6.0)
    }
}

impl MomentGuard {
    pub fn check(&self, q: f64) -> Result<()> {
        if !(q > 0.0) {
            return Err(domain("q", q));
        }
        match *self {
            MomentGuard::KnownNu(nu) if q >= nu => Err(Error::MomentUndefined { q, nu }),
            MomentGuard::Cap(cap) if q > cap => Err(domain("q", q)),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentExponent {
    pub q: f64,
    /// Slope qD̄(q).
    pub exponent: f64,
    pub stderr: f64,
    /// ⟨|r_T|^q⟩ per duration.
    pub moments: Vec<f64>,
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentScalingReport {
    pub durations: Vec<usize>,
    pub guard: MomentGuard,
    pub exponents: Vec<MomentExponent>,
}

/// ⟨|r_T|^q⟩ for every q at a single duration; one cell row of the (q, T) grid.
pub fn moments_at(unit: &[f64], dur: usize, qs: &[f64]) -> Result<Vec<f64>> {
    let r = aggregate(unit, dur)?;
    Ok(qs.iter().map(|q| crate::stats::abs_moment(&r, *q)).collect())
}

/// Builds the report from precomputed rows (`rows[i]` belongs to `durations[i]`).
pub fn moment_report(qs: &[f64], durations: &[usize], guard: MomentGuard, rows: &[Vec<f64>]) -> Result<MomentScalingReport> {
    let ts: Vec<f64> = durations.iter().map(|t| *t as f64).collect();
    let mut exponents = Vec::with_capacity(qs.len());
    for (k, &q) in qs.iter().enumerate() {
        let moments: Vec<f64> = rows.iter().map(|row| row[k]).collect();
        if moments.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::Degenerate("zero absolute moment"));
        }
        let fit = log_log_fit(&ts, &moments)?;
        exponents.push(MomentExponent { q, exponent: fit.slope, stderr: fit.slope_stderr, moments, fit });
    }
    Ok(MomentScalingReport { durations: durations.to_vec(), guard, exponents })
}

pub fn check_moment_request(qs: &[f64], durations: &[usize], guard: MomentGuard) -> Result<()> {
    check_durations(durations)?;
    if qs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    qs.iter().try_for_each(|q| guard.check(*q))
}

/// Per-q OLS slope of ln⟨|r_T|^q⟩ on ln T over overlapping windows.
pub fn moment_exponents(unit: &[f64], qs: &[f64], durations: &[usize], guard: MomentGuard) -> Result<MomentScalingReport> {
    check_moment_request(qs, durations, guard)?;
    let rows = durations.iter().map(|t| moments_at(unit, *t, qs)).collect::<Result<Vec<_>>>()?;
    moment_report(qs, durations, guard, &rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrReport {
    /// c(τ) for τ = 0..=max_lag.
    pub c: Vec<f64>,
    pub beta: f64,
    pub beta_stderr: f64,
    pub fit_range: (usize, usize),
    /// Lags inside the fit range dropped because c(τ) ≤ 0.
    pub excluded: Vec<usize>,
    pub fit: LinearFit,
}

/// Volatility autocorrelation at one lag:
///
/// c(τ) = [Σ|r_t||r_{t+τ}| − Σ|r_t| Σ|r_{t+τ}| / n] / [Σ|r_t|² − (Σ|r_t|)² / n]
///
/// with every sum over t = 0..n−1 and n = len − τ, so c(0) = 1 exactly.
pub fn autocorr_at(abs: &[f64], lag: usize) -> Result<f64> {
    if lag >= abs.len() {
        return Err(Error::InsufficientData { needed: lag + 1, got: abs.len() });
    }
    let n = abs.len() - lag;
    let head = &abs[..n];
    let tail = &abs[lag..];
    let connected = |x: &[f64], y: &[f64]| {
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        sxy - sx * sy / n as f64
    };
    let den = connected(head, head);
    if !(den > 0.0) {
        return Err(Error::Degenerate("all return magnitudes equal"));
    }
    Ok(connected(head, tail) / den)
}

pub fn check_autocorr_request(len: usize, max_lag: usize, fit_range: (usize, usize)) -> Result<()> {
    if 2 * max_lag >= len {
        return Err(Error::InsufficientData { needed: 2 * max_lag + 1, got: len });
    }
    let (lo, hi) = fit_range;
    if lo < 1 || hi <= lo || hi > max_lag {
        return Err(domain("fit range end", hi as f64));
    }
    Ok(())
}

/// Power-law fit c(τ) ∼ τ^{−β} over the positive values inside `fit_range`.
pub fn fit_decay(c: &[f64], fit_range: (usize, usize)) -> Result<(LinearFit, Vec<usize>)> {
    let (lo, hi) = fit_range;
    let mut lags = Vec::new();
    let mut vals = Vec::new();
    let mut excluded = Vec::new();
    for (tau, v) in c.iter().enumerate().take(hi + 1).skip(lo) {
        if *v > 0.0 {
            lags.push(tau as f64);
            vals.push(*v);
        } else {
            excluded.push(tau);
        }
    }
    if lags.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: lags.len() });
    }
    Ok((log_log_fit(&lags, &vals)?, excluded))
}

pub fn autocorr_report(c: Vec<f64>, fit_range: (usize, usize)) -> Result<AutocorrReport> {
    let (fit, excluded) = fit_decay(&c, fit_range)?;
    Ok(AutocorrReport { c, beta: -fit.slope, beta_stderr: fit.slope_stderr, fit_range, excluded, fit })
}

pub fn volatility_autocorr(returns: &[f64], max_lag: usize, fit_range: (usize, usize)) -> Result<AutocorrReport> {
    check_autocorr_request(returns.len(), max_lag, fit_range)?;
    let abs: Vec<f64> = returns.iter().map(|r| libm::fabs(*r)).collect();
    let c = (0..=max_lag).map(|tau| autocorr_at(&abs, tau)).collect::<Result<Vec<_>>>()?;
    autocorr_report(c, fit_range)
}

/// r₂ sample for one |r₁| class.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalBin {
    pub lo: f64,
    pub hi: f64,
    pub r2: Vec<f64>,
    pub histogram: EmpiricalDistribution,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEstimate {
    pub dur: usize,
    pub pairs: usize,
    pub bins: Vec<ConditionalBin>,
}

pub const DEFAULT_MIN_PAIRS: usize = 200;

/// Successive non-overlapping pairs (r(t,T), r(t+T,T)), t = 0, 2T, 4T, ...
pub fn return_pairs(unit: &[f64], dur: usize) -> Result<Vec<(f64, f64)>> {
    if dur < 1 {
        return Err(domain("T", 0.0));
    }
    Ok(unit
        .chunks_exact(2 * dur)
        .map(|c| (c[..dur].iter().sum(), c[dur..].iter().sum()))
        .collect())
}

/// Histograms of r₂ conditioned on |r₁| ∈ [edges[k], edges[k+1]); the last
/// class is closed on the right.
pub fn conditional_pdf_estimate(
    unit: &[f64],
    dur: usize,
    abs_r1_edges: &[f64],
    binning: &Binning,
    min_pairs: usize,
) -> Result<ConditionalEstimate> {
    if abs_r1_edges.len() < 2 || abs_r1_edges.windows(2).any(|w| !(w[0] < w[1])) || abs_r1_edges[0] < 0.0 {
        return Err(Error::Degenerate("|r1| edges must be non-negative and strictly increasing"));
    }
    let pairs = return_pairs(unit, dur)?;
    let classes = abs_r1_edges.len() - 1;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); classes];
    let last = abs_r1_edges[classes];
    for (r1, r2) in &pairs {
        let a = libm::fabs(*r1);
        if a < abs_r1_edges[0] || a > last {
            continue;
        }
        let k = abs_r1_edges.partition_point(|e| *e <= a).saturating_sub(1).min(classes - 1);
        groups[k].push(*r2);
    }
    let mut bins = Vec::with_capacity(classes);
    for (k, r2) in groups.into_iter().enumerate() {
        if r2.len() < min_pairs.max(MIN_PDF_SAMPLES) {
            return Err(Error::EmptyBin { bin: k, count: r2.len(), needed: min_pairs.max(MIN_PDF_SAMPLES) });
        }
        let histogram = empirical_pdf(&r2, dur, binning)?;
        let variance = crate::stats::abs_moment(&r2, 2.0);
        bins.push(ConditionalBin { lo: abs_r1_edges[k], hi: abs_r1_edges[k + 1], r2, histogram, variance });
    }
    Ok(ConditionalEstimate { dur, pairs: pairs.len(), bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, ScaleMixture, StudentT};
    use crate::rng::StreamRng;
    use crate::stats::{ks_one_sample, skewness};
    use proptest::prelude::*;

    fn gaussian(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = StreamRng::new(seed, 0);
        (0..n).map(|_| rng.normal()).collect()
    }

    #[test]
    fn log_return_examples() {
        assert!(log_returns(&[5.0; 10], 3).unwrap().iter().all(|r| *r == 0.0));
        let doubling: Vec<f64> = (0..12).map(|i| libm::exp2(i as f64)).collect();
        let r3 = log_returns(&doubling, 3).unwrap();
        assert_eq!(r3.len(), 9);
        assert!(r3.iter().all(|r| (r - 3.0 * core::f64::consts::LN_2).abs() < 1e-12));
        let prices = [100.0, 101.5, 99.0, 104.2, 103.3];
        let r1 = log_returns(&prices, 1).unwrap();
        let r2 = log_returns(&prices, 2).unwrap();
        for t in 0..r2.len() {
            assert!((r2[t] - r1[t] - r1[t + 1]).abs() < 1e-12);
        }
        assert_eq!(log_returns(&[1.0, 0.0, 2.0], 1), Err(Error::NonPositivePrice { index: 1, value: 0.0 }));
    }

    #[test]
    fn detrend_examples() {
        let (same, drift) = detrend(&[-1.0, 1.0, -2.0, 2.0]).unwrap();
        assert_eq!((same, drift), (vec![-1.0, 1.0, -2.0, 2.0], 0.0));
        let (zeros, drift) = detrend(&[0.25; 8]).unwrap();
        assert!(zeros.iter().all(|z| *z == 0.0));
        assert_eq!(drift, 0.25);
        let xs = gaussian(1000, 2);
        assert!((detrend(&xs).unwrap().1 - mean(&xs)).abs() < 1e-15);
        assert!(detrend(&[]).is_err());
    }

    #[test]
    fn histogram_mass_and_edges() {
        let xs = gaussian(20_000, 3);
        for binning in [Binning::default(), Binning::Uniform { bins: 40 }] {
            let pdf = empirical_pdf(&xs, 1, &binning).unwrap();
            assert!(pdf.edges.windows(2).all(|e| e[0] < e[1]));
            assert_eq!(pdf.samples, xs.len());
            assert!((pdf.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let area: f64 = pdf.densities().iter().zip(pdf.edges.windows(2)).map(|(p, e)| p * (e[1] - e[0])).sum();
            assert!((area - 1.0).abs() < 1e-12);
        }
        assert!(empirical_pdf(&xs[..99], 1, &Binning::default()).is_err());
    }

    #[test]
    fn tail_bins_grow_geometrically() {
        let g = StudentT { nu: 3.0, scale: 1.0 };
        let mut rng = StreamRng::new(4, 0);
        let xs: Vec<f64> = (0..50_000).map(|_| g.sample(&mut rng)).collect();
        let e = bin_edges(&xs, &Binning::default()).unwrap();
        let widths: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
        let last = widths.len() - 1;
        // the outermost bins are clipped to the extremes, the next ones are not
        assert!(widths[last - 1] > 5.0 * widths[last / 2]);
    }

    #[test]
    fn symmetric_input_has_small_skewness() {
        let xs = gaussian(100_000, 5);
        let pdf = empirical_pdf(&xs, 1, &Binning::default()).unwrap();
        let skew = skewness(&xs);
        assert!(skew.abs() < 3.0 * libm::sqrt(6.0 / xs.len() as f64));
        assert!(pdf.mean.abs() < 3.0 / libm::sqrt(xs.len() as f64));
    }

    #[test]
    fn student_t_sample_passes_ks() {
        let g = StudentT { nu: 4.0, scale: 0.01 };
        let mut rng = StreamRng::new(6, 0);
        let xs: Vec<f64> = (0..5000).map(|_| g.sample(&mut rng)).collect();
        let ks = ks_one_sample(&xs, |x| g.cdf(x)).unwrap();
        // 1% critical value of √n·D
        assert!(ks.statistic * libm::sqrt(xs.len() as f64) < 1.6276);
    }

    #[test]
    fn collapse_gaussian_and_ballistic() {
        let xs = gaussian(100_000, 7);
        let fit = collapse_fit(&xs, &[1, 2, 4, 8, 16], &Binning::default()).unwrap();
        assert!((fit.d_bar - 0.5).abs() < 0.02, "{}", fit.d_bar);
        assert_eq!(fit.collapsed_points().len(), 5);
        let ballistic: Vec<f64> = gaussian(20_000, 8).iter().map(|z| 1.0 + 0.01 * z).collect();
        let fit = collapse_fit(&ballistic, &[1, 2, 4, 8, 16], &Binning::default()).unwrap();
        assert!((fit.d_bar - 1.0).abs() < 0.01, "{}", fit.d_bar);
        assert!(collapse_fit(&[0.0; 500], &[1, 2, 4, 8], &Binning::default()).is_err());
        assert!(collapse_fit(&xs, &[1, 2, 4], &Binning::default()).is_err());
    }

    #[test]
    fn gaussian_monoscaling() {
        let xs = gaussian(200_000, 9);
        let ts: Vec<usize> = (1..=25).collect();
        let rep = moment_exponents(&xs, &[1.0, 2.0, 3.0, 4.0], &ts, MomentGuard::default()).unwrap();
        for e in &rep.exponents {
            // overlapping windows make the OLS stderr optimistic, so it only
            // gates a loose check here
            assert!((e.exponent - e.q / 2.0).abs() < 0.03, "q={}: {}", e.q, e.exponent);
            assert!(e.stderr.is_finite());
        }
    }

    #[test]
    fn moment_guard() {
        let xs = gaussian(1000, 10);
        let ts = [1, 2, 3, 4];
        assert!(matches!(
            moment_exponents(&xs, &[4.0], &ts, MomentGuard::KnownNu(4.0)),
            Err(Error::MomentUndefined { .. })
        ));
        assert!(moment_exponents(&xs, &[7.0], &ts, MomentGuard::Cap(6.0)).is_err());
        assert!(moment_exponents(&xs, &[6.0], &ts, MomentGuard::Cap(6.0)).is_ok());
        assert!(moment_exponents(&[0.0; 100], &[2.0], &ts, MomentGuard::default()).is_err());
    }

    #[test]
    fn aggregated_moments_match_direct_sums() {
        let xs = gaussian(5000, 11);
        for dur in [1usize, 3, 25] {
            let agg = aggregate(&xs, dur).unwrap();
            let direct: Vec<f64> = (0..=xs.len() - dur).map(|t| xs[t..t + dur].iter().sum()).collect();
            for q in [1.0, 2.5] {
                let a = crate::stats::abs_moment(&agg, q);
                let b = crate::stats::abs_moment(&direct, q);
                assert!((a - b).abs() <= 1e-12 * b);
            }
        }
    }

    #[test]
    fn autocorr_normalization_and_iid() {
        let xs = gaussian(100_000, 12);
        let rep = volatility_autocorr(&xs, 50, (1, 50)).unwrap();
        assert_eq!(rep.c[0], 1.0);
        let bound = 4.0 / libm::sqrt(xs.len() as f64);
        assert!(rep.c[1..].iter().all(|c| c.abs() < bound));
        assert!(volatility_autocorr(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0], 2, (1, 2)).is_err());
        assert!(volatility_autocorr(&xs[..100], 50, (1, 40)).is_err());
    }

    #[test]
    fn autocorr_matches_literal_caption_sums() {
        // literal transcription: t runs 0..=t_max with t_max + τ − 1 = len − 1
        let xs = gaussian(300, 13);
        let a: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
        for tau in [0usize, 1, 7, 40] {
            let n = a.len() - tau;
            let (mut sxy, mut sx, mut sy, mut sxx) = (0.0, 0.0, 0.0, 0.0);
            for t in 0..n {
                sxy += a[t] * a[t + tau];
                sx += a[t];
                sy += a[t + tau];
                sxx += a[t] * a[t];
            }
            let lit = (sxy - sx * sy / n as f64) / (sxx - sx * sx / n as f64);
            assert!((autocorr_at(&a, tau).unwrap() - lit).abs() < 1e-14);
        }
    }

    #[test]
    fn decay_fit_excludes_non_positive_lags() {
        let mut c: Vec<f64> = (0..=20).map(|t| if t == 0 { 1.0 } else { libm::pow(t as f64, -0.3) }).collect();
        c[5] = -0.01;
        c[9] = 0.0;
        let rep = autocorr_report(c, (1, 20)).unwrap();
        assert_eq!(rep.excluded, [5, 9]);
        assert!((rep.beta - 0.3).abs() < 1e-12);
    }

    #[test]
    fn conditional_estimate_bins() {
        let p = ModelParams::new(0.24, 500, 4.0, 0.01).unwrap();
        let unit = crate::sampler::sample_latent(200_000, &p, 14).unwrap().returns;
        let pairs = return_pairs(&unit, 5).unwrap();
        assert_eq!(pairs.len(), 20_000);
        let abs1: Vec<f64> = pairs.iter().map(|p| p.0.abs()).collect();
        let edges = quantile_edges(&abs1, 3).unwrap();
        let est = conditional_pdf_estimate(&unit, 5, &edges, &Binning::default(), 200).unwrap();
        assert_eq!(est.bins.iter().map(|b| b.r2.len()).sum::<usize>(), 20_000);
        for b in &est.bins {
            assert!((b.histogram.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(est.bins.windows(2).all(|w| w[0].variance < w[1].variance));
        assert!(matches!(
            conditional_pdf_estimate(&unit, 5, &edges, &Binning::default(), 10_000),
            Err(Error::EmptyBin { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn aggregation_additive(xs in proptest::collection::vec(-0.1f64..0.1, 10..200), dur in 1usize..10) {
            let a = aggregate(&xs, dur).unwrap();
            prop_assert_eq!(a.len(), xs.len() - dur + 1);
            let one = aggregate(&xs, 1).unwrap();
            prop_assert_eq!(one, xs.clone());
        }

        #[test]
        fn histogram_counts_every_sample(xs in proptest::collection::vec(-5.0f64..5.0, 100..400)) {
            let e = bin_edges(&xs, &Binning::default()).unwrap();
            prop_assert!(e.windows(2).all(|w| w[0] < w[1]));
            let c = histogram(&xs, &e);
            prop_assert_eq!(c.iter().sum::<u64>() as usize, xs.len());
        }
    }
}
