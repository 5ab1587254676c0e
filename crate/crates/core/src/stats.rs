//! Sample statistics, ordinary least squares and Kolmogorov-Smirnov tests.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::special::kolmogorov_sf;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by n).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m) * (x - m) * (x - m)).sum::<f64>() / n;
    m3 / libm::pow(m2, 1.5)
}

/// Mean of |x|^q.
pub fn abs_moment(xs: &[f64], q: f64) -> f64 {
    xs.iter().map(|x| libm::pow(libm::fabs(*x), q)).sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n.min(y.len()) });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("regressor has zero spread"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - intercept - slope * a;
            e * e
        })
        .sum();
    let slope_stderr = if n > 2 { libm::sqrt(rss / (nf - 2.0) / sxx) } else { 0.0 };
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, slope_stderr, r_squared, points: n })
}

/// Least-squares slope of ln y on ln x.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Degenerate("log-log fit needs positive values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| libm::log(*v)).collect();
    let ly: Vec<f64> = y.iter().map(|v| libm::log(*v)).collect();
    ols(&lx, &ly)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    /// Supremum distance between the two distribution functions.
    pub statistic: f64,
    /// Asymptotic p-value with Stephens' small-sample correction.
    pub p_value: f64,
}

fn ks_p_value(statistic: f64, effective_n: f64) -> f64 {
    let en = libm::sqrt(effective_n);
    kolmogorov_sf((en + 0.12 + 0.11 / en) * statistic)
}

/// One-sample test of `sample` against the continuous distribution function `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<KsOutcome> {
    if sample.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(libm::fabs((i + 1) as f64 / n - f)).max(libm::fabs(f - i as f64 / n));
    }
    Ok(KsOutcome { statistic: d, p_value: ks_p_value(d, n) })
}

/// Two-sample test of equality in distribution.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max(libm::fabs(i as f64 / n as f64 - j as f64 / m as f64));
    }
    let effective = (n * m) as f64 / (n + m) as f64;
    Ok(KsOutcome { statistic: d, p_value: ks_p_value(d, effective) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v - 2.0).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-14);
        assert!((fit.intercept + 2.0).abs() < 1e-14);
        assert!(fit.slope_stderr < 1e-14);
    }

    #[test]
    fn ols_stderr_matches_hand_computation() {
        // residuals (0.1, -0.2, 0.1) about slope 1: rss = 0.06, sxx = 2
        let fit = ols(&[0.0, 1.0, 2.0], &[0.1, 0.8, 2.1]).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-14);
        assert!((fit.slope_stderr - libm::sqrt(0.06 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_spread_regressor_is_degenerate() {
        assert!(matches!(ols(&[1.0, 1.0], &[0.0, 1.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn two_sample_identical_inputs() {
        let a = [0.3, 0.1, 0.9, 0.5];
        let out = ks_two_sample(&a, &a).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert_eq!(out.p_value, 1.0);
    }

    #[test]
    fn two_sample_disjoint_inputs() {
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let b: Vec<f64> = (100..150).map(|i| i as f64).collect();
        let out = ks_two_sample(&a, &b).unwrap();
        assert_eq!(out.statistic, 1.0);
        assert!(out.p_value < 1e-10);
    }

    #[test]
    fn one_sample_uniform_grid() {
        // midpoints of 100 equal cells sit 0.005 from the uniform CDF steps
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let out = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((out.statistic - 0.005).abs() < 1e-12);
        assert!(out.p_value > 0.99);
    }
}
