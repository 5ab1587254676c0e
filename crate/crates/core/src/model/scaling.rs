use core::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::rng::StreamRng;
use crate::special::{ln_bessel_k, ln_gamma, normal_cdf, student_t_cdf};

/// A symmetric Gaussian scale mixture g(x) = ∫ ρ(σ) N(x; 0, σ²) dσ.
///
/// The model's joint law only touches the mixing law through these methods,
/// so any symmetric scale mixture can stand in for the Student-t default.
pub trait ScaleMixture {
    fn density(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    /// ĝ(k) = E[exp(−σ²k²/2)]; real because g is even.
    fn char_fn(&self, k: f64) -> f64;
    /// μ_q = ∫ |x|^q g(x) dx.
    fn abs_moment(&self, q: f64) -> Result<f64>;
    /// E[σ].
    fn mixing_mean(&self) -> f64;
    /// E[σ²].
    fn mixing_second_moment(&self) -> f64;
    fn sample_sigma(&self, rng: &mut StreamRng) -> f64;
}

/// Student-t with `nu` degrees of freedom and scale `scale`, i.e. σ² inverse
/// gamma with shape ν/2 and rate νs²/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    pub nu: f64,
    pub scale: f64,
}

impl StudentT {
    pub fn new(nu: f64, scale: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(domain("nu", nu));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(domain("scale", scale));
        }
        Ok(Self { nu, scale })
    }

    fn ln_norm(&self) -> f64 {
        ln_gamma(0.5 * (self.nu + 1.0)) - ln_gamma(0.5 * self.nu) - 0.5 * libm::log(self.nu * PI)
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        let z = x / self.scale;
        self.ln_norm() - libm::log(self.scale) - 0.5 * (self.nu + 1.0) * libm::log1p(z * z / self.nu)
    }

    /// Density of the latent σ (not σ²).
    pub fn mixing_density(&self, sigma: f64) -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        let shape = 0.5 * self.nu;
        let rate = 0.5 * self.nu * self.scale * self.scale;
        let v = sigma * sigma;
        let ln = shape * libm::log(rate) - ln_gamma(shape) - (shape + 1.0) * libm::log(v) - rate / v;
        2.0 * sigma * libm::exp(ln)
    }

    pub fn variance(&self) -> f64 {
        if self.nu > 2.0 {
            self.nu * self.scale * self.scale / (self.nu - 2.0)
        } else {
            f64::INFINITY
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        self.scale * rng.student_t(self.nu)
    }
}

impl ScaleMixture for StudentT {
    fn density(&self, x: f64) -> f64 {
        libm::exp(self.ln_density(x))
    }

    fn cdf(&self, x: f64) -> f64 {
        student_t_cdf(x / self.scale, self.nu)
    }

    fn char_fn(&self, k: f64) -> f64 {
        // (√ν s|k|)^{ν/2} K_{ν/2}(√ν s|k|) / (Γ(ν/2) 2^{ν/2−1})
        let z = libm::sqrt(self.nu) * self.scale * libm::fabs(k);
        if z < 1e-12 {
            return 1.0;
        }
        let half = 0.5 * self.nu;
        let ln = half * libm::log(z) + ln_bessel_k(half, z)
            - ln_gamma(half)
            - (half - 1.0) * core::f64::consts::LN_2;
        libm::exp(ln).min(1.0)
    }

    fn abs_moment(&self, q: f64) -> Result<f64> {
        if q >= self.nu {
            return Err(Error::MomentUndefined { q, nu: self.nu });
        }
        if !(q > -1.0) {
            return Err(domain("q", q));
        }
        let ln = q * libm::log(self.scale) + 0.5 * q * libm::log(self.nu)
            + ln_gamma(0.5 * (q + 1.0))
            + ln_gamma(0.5 * (self.nu - q))
            - 0.5 * libm::log(PI)
            - ln_gamma(0.5 * self.nu);
        Ok(libm::exp(ln))
    }

    fn mixing_mean(&self) -> f64 {
        if self.nu <= 1.0 {
            return f64::INFINITY;
        }
        let half = 0.5 * self.nu;
        self.scale * libm::sqrt(half) * libm::exp(ln_gamma(half - 0.5) - ln_gamma(half))
    }

    fn mixing_second_moment(&self) -> f64 {
        self.variance()
    }

    fn sample_sigma(&self, rng: &mut StreamRng) -> f64 {
        let rate = 0.5 * self.nu * self.scale * self.scale;
        libm::sqrt(rate / rng.gamma(0.5 * self.nu))
    }
}

/// Degenerate mixing law: σ fixed, g Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub sigma: f64,
}

impl ScaleMixture for Gaussian {
    fn density(&self, x: f64) -> f64 {
        let z = x / self.sigma;
        libm::exp(-0.5 * z * z) / (self.sigma * libm::sqrt(2.0 * PI))
    }

    fn cdf(&self, x: f64) -> f64 {
        normal_cdf(x / self.sigma)
    }

    fn char_fn(&self, k: f64) -> f64 {
        libm::exp(-0.5 * self.sigma * self.sigma * k * k)
    }

    fn abs_moment(&self, q: f64) -> Result<f64> {
        if !(q > -1.0) {
            return Err(domain("q", q));
        }
        let ln = q * libm::log(self.sigma) + 0.5 * q * core::f64::consts::LN_2 + ln_gamma(0.5 * (q + 1.0))
            - 0.5 * libm::log(PI);
        Ok(libm::exp(ln))
    }

    fn mixing_mean(&self) -> f64 {
        self.sigma
    }

    fn mixing_second_moment(&self) -> f64 {
        self.sigma * self.sigma
    }

    fn sample_sigma(&self, _rng: &mut StreamRng) -> f64 {
        self.sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_real_line, integrate_to_infinity};
    use proptest::prelude::*;

    const T4: StudentT = StudentT { nu: 4.0, scale: 0.01 };

    #[test]
    fn normalized_to_1e8() {
        for g in [T4, StudentT { nu: 2.5, scale: 3.0 }, StudentT { nu: 30.0, scale: 1.0 }] {
            let q = integrate_real_line(|x| g.density(x), 0.0, 1e-12, 1e-12);
            assert!((q.value - 1.0).abs() < 1e-8, "{g:?}: {}", q.value);
        }
    }

    #[test]
    fn abs_moments_match_quadrature() {
        for &q in &[0.5, 1.0, 2.0, 3.0, 3.5] {
            let exact = T4.abs_moment(q).unwrap();
            let num = 2.0 * integrate_to_infinity(|x| libm::pow(x, q) * T4.density(x), 0.0, 0.0, 1e-11).value;
            assert!(((exact - num) / exact).abs() < 1e-7, "q={q}: {exact} vs {num}");
        }
        // μ₂ = νs²/(ν−2)
        assert!((T4.abs_moment(2.0).unwrap() - 2e-4).abs() < 1e-18);
    }

    #[test]
    fn moments_at_or_beyond_nu_fail() {
        assert_eq!(T4.abs_moment(4.0), Err(Error::MomentUndefined { q: 4.0, nu: 4.0 }));
        assert!(T4.abs_moment(5.0).is_err());
    }

    #[test]
    fn mixing_moments_match_quadrature() {
        let g = StudentT { nu: 4.0, scale: 1.3 };
        let m0 = integrate_to_infinity(|s| g.mixing_density(s), 0.0, 0.0, 1e-12).value;
        let m1 = integrate_to_infinity(|s| s * g.mixing_density(s), 0.0, 0.0, 1e-12).value;
        let m2 = integrate_to_infinity(|s| s * s * g.mixing_density(s), 0.0, 0.0, 1e-12).value;
        assert!((m0 - 1.0).abs() < 1e-9);
        assert!((m1 - g.mixing_mean()).abs() < 1e-9);
        assert!((m2 - g.mixing_second_moment()).abs() < 1e-8);
    }

    #[test]
    fn char_fn_matches_mixture_integral() {
        // independent route: ĝ(k) = ∫ ρ(σ) exp(−σ²k²/2) dσ
        for g in [StudentT { nu: 4.0, scale: 1.0 }, StudentT { nu: 7.3, scale: 0.5 }] {
            for &k in &[0.0, 1e-3, 0.3, 1.0, 2.5, 8.0] {
                let mix = integrate_to_infinity(
                    |s| g.mixing_density(s) * libm::exp(-0.5 * s * s * k * k),
                    0.0,
                    1e-14,
                    1e-12,
                )
                .value;
                assert!((g.char_fn(k) - mix).abs() < 1e-9, "k={k}: {} vs {mix}", g.char_fn(k));
            }
        }
    }

    #[test]
    fn cdf_matches_density_integral() {
        for &x in &[-0.03, -0.001, 0.0, 0.02] {
            let num = 0.5 + crate::quad::integrate(|y| T4.density(y), 0.0, x, 1e-14, 1e-12).value;
            assert!((T4.cdf(x) - num).abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_moments() {
        let g = Gaussian { sigma: 2.0 };
        assert!((g.abs_moment(2.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((g.abs_moment(4.0).unwrap() - 48.0).abs() < 1e-10);
        assert!((g.abs_moment(1.0).unwrap() - 2.0 * libm::sqrt(2.0 / PI)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn symmetric_density(x in -1.0f64..1.0, nu in 2.1f64..50.0) {
            let g = StudentT { nu, scale: 0.05 };
            prop_assert_eq!(g.density(x), g.density(-x));
        }

        #[test]
        fn char_fn_bounded(k in -200.0f64..200.0, nu in 2.1f64..20.0) {
            let v = StudentT { nu, scale: 0.05 }.char_fn(k);
            prop_assert!(v.abs() <= 1.0);
            prop_assert!(v >= 0.0);
        }
    }
}
