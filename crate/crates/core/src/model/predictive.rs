//! Conditional laws under the Student-t (inverse-gamma mixing) instance.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{Model, ScaleMixture, StudentT};
use crate::error::{domain, Result};
use crate::quad::integrate_real_line;
use crate::special::normal_cdf;

impl Model<StudentT> {
    /// Law of the next unit return given the previous `window.len()` returns
    /// of the same epoch.
    ///
    /// Posterior conjugacy of the inverse-gamma mixing law makes it exact:
    /// Student-t with ν + m' degrees of freedom and scale
    /// `next_width · √((νs² + Σ r_j²/a_j²) / (ν + m'))`.
    pub fn conditional_predictive(
        &self,
        window: &[f64],
        window_widths: &[f64],
        next_width: f64,
    ) -> Result<StudentT> {
        if window.len() != window_widths.len() {
            return Err(domain("window_widths.len()", window_widths.len() as f64));
        }
        if window.len() > self.params().window() {
            return Err(domain("window.len()", window.len() as f64));
        }
        if let Some(w) = window_widths.iter().chain(core::iter::once(&next_width)).find(|w| !(**w > 0.0)) {
            return Err(domain("width", *w));
        }
        let sum: f64 = window.iter().zip(window_widths).map(|(r, a)| (r / a) * (r / a)).sum();
        Ok(predictive_law(self.scaling(), window.len(), sum, next_width))
    }

    /// Law of r₂ = r(t+T, T) given |r₁| = |r(t, T)|, with the start time t
    /// averaged over one epoch period as in p̄. Requires 2T ≤ τ_c.
    pub fn conditional_pair(&self, r1: f64, dur: usize) -> Result<ConditionalPair> {
        let parts = PairParts::new(self, dur)?;
        let g = *self.scaling();
        let components = parts
            .positions
            .iter()
            .map(|pos| match *pos {
                Position::Shared { w1, w2 } => {
                    let marginal = StudentT { nu: g.nu, scale: g.scale * w1 };
                    let z = r1 / w1;
                    let law = predictive_law(&g, 1, z * z, w2);
                    (marginal.density(r1), PairLaw::Closed(law))
                }
                Position::Split { w1, w2 } => {
                    let marginal = StudentT { nu: g.nu, scale: g.scale * w1 };
                    let law = StudentT { nu: g.nu, scale: g.scale * w2 };
                    (marginal.density(r1), PairLaw::Closed(law))
                }
                Position::Straddle(v) => {
                    let weight = latent_2d(&g, |a, b| normal_pdf_var(r1, a * v.u1 + b * v.v1));
                    (weight, PairLaw::Straddle(v))
                }
            })
            .collect();
        Ok(ConditionalPair { g, r1, components })
    }

    /// Law of r₂ given |r₁| ∈ [lo, hi), epoch-averaged as in
    /// [`Self::conditional_pair`]. `hi` may be infinite.
    pub fn conditional_pair_in_bin(&self, lo: f64, hi: f64, dur: usize) -> Result<BinConditional> {
        if !(lo >= 0.0) || !(hi > lo) {
            return Err(domain("bin", hi - lo));
        }
        let parts = PairParts::new(self, dur)?;
        let g = *self.scaling();
        let nodes = bin_nodes(lo, hi, g.scale * libm::sqrt(dur as f64));
        let mut closed = Vec::new();
        let mut straddles = Vec::new();
        for pos in &parts.positions {
            match *pos {
                Position::Shared { w1, w2 } => {
                    let marginal = StudentT { nu: g.nu, scale: g.scale * w1 };
                    for &(r1, wt) in &nodes {
                        let z = r1 / w1;
                        closed.push((wt * marginal.density(r1), predictive_law(&g, 1, z * z, w2)));
                    }
                }
                Position::Split { w1, w2 } => {
                    let marginal = StudentT { nu: g.nu, scale: g.scale * w1 };
                    let mass = marginal.cdf(hi) - marginal.cdf(lo);
                    closed.push((mass, StudentT { nu: g.nu, scale: g.scale * w2 }));
                }
                Position::Straddle(v) => {
                    let mass = latent_2d(&g, |a, b| band_mass(lo, hi, a * v.u1 + b * v.v1));
                    straddles.push((mass, v));
                }
            }
        }
        let total = closed.iter().map(|c| c.0).sum::<f64>() + straddles.iter().map(|c| c.0).sum::<f64>();
        Ok(BinConditional { g, lo, hi, closed, straddles, total })
    }
}

/// Predictive Student-t after observing `count` returns whose squared
/// standardized values sum to `sum_sq`.
pub(crate) fn predictive_law(g: &StudentT, count: usize, sum_sq: f64, next_width: f64) -> StudentT {
    let nu = g.nu + count as f64;
    let scale = next_width * libm::sqrt((g.nu * g.scale * g.scale + sum_sq) / nu);
    StudentT { nu, scale }
}

/// Variance components of a pair whose intervals cross an epoch reset:
/// conditional on the latent scales (σ_A, σ_B) of the two epochs,
/// Var r₁ = σ_A² u1 + σ_B² v1 and Var r₂ = σ_A² u2 + σ_B² v2.
#[derive(Debug, Clone, Copy)]
struct Straddle {
    u1: f64,
    v1: f64,
    u2: f64,
    v2: f64,
}

#[derive(Debug, Clone, Copy)]
enum Position {
    /// Both intervals in one epoch.
    Shared { w1: f64, w2: f64 },
    /// The reset falls exactly between the intervals.
    Split { w1: f64, w2: f64 },
    Straddle(Straddle),
}

struct PairParts {
    positions: Vec<Position>,
}

impl PairParts {
    fn new(model: &Model<StudentT>, dur: usize) -> Result<Self> {
        let tau_c = model.params().tau_c();
        if dur < 1 || 2 * dur > tau_c {
            return Err(domain("T", dur as f64));
        }
        let w = model.widths();
        let f = |t: usize| t as f64;
        let positions = (0..tau_c)
            .map(|t| {
                let (end1, end2) = (t + dur, t + 2 * dur);
                if end2 <= tau_c {
                    Position::Shared { w1: w.width(f(t), f(dur)), w2: w.width(f(end1), f(dur)) }
                } else if end1 == tau_c {
                    Position::Split { w1: w.width(f(t), f(dur)), w2: w.width(0.0, f(dur)) }
                } else if end1 < tau_c {
                    Position::Straddle(Straddle {
                        u1: w.width_squared(f(t), f(dur)),
                        v1: 0.0,
                        u2: w.width_squared(f(end1), f(tau_c - end1)),
                        v2: w.width_squared(0.0, f(end2 - tau_c)),
                    })
                } else {
                    Position::Straddle(Straddle {
                        u1: w.width_squared(f(t), f(tau_c - t)),
                        v1: w.width_squared(0.0, f(end1 - tau_c)),
                        u2: 0.0,
                        v2: w.width_squared(f(end1 - tau_c), f(dur)),
                    })
                }
            })
            .collect();
        Ok(Self { positions })
    }
}

#[derive(Debug, Clone, Copy)]
enum PairLaw {
    Closed(StudentT),
    Straddle(Straddle),
}

/// p̄^{(2)}_{2T}(r₂ | |r₁|): a mixture over epoch positions, weighted by the
/// marginal density of r₁ at each position.
#[derive(Debug, Clone)]
pub struct ConditionalPair {
    g: StudentT,
    r1: f64,
    components: Vec<(f64, PairLaw)>,
}

impl ConditionalPair {
    fn total(&self) -> f64 {
        self.components.iter().map(|c| c.0).sum()
    }

    pub fn density(&self, r2: f64) -> f64 {
        let r1 = self.r1;
        let num: f64 = self
            .components
            .iter()
            .map(|(wt, law)| match law {
                PairLaw::Closed(t) => wt * t.density(r2),
                PairLaw::Straddle(v) => latent_2d(&self.g, |a, b| {
                    normal_pdf_var(r1, a * v.u1 + b * v.v1) * normal_pdf_var(r2, a * v.u2 + b * v.v2)
                }),
            })
            .sum();
        num / self.total()
    }

    pub fn cdf(&self, r2: f64) -> f64 {
        let r1 = self.r1;
        let num: f64 = self
            .components
            .iter()
            .map(|(wt, law)| match law {
                PairLaw::Closed(t) => wt * t.cdf(r2),
                PairLaw::Straddle(v) => latent_2d(&self.g, |a, b| {
                    normal_pdf_var(r1, a * v.u1 + b * v.v1) * normal_cdf(r2 / libm::sqrt(a * v.u2 + b * v.v2))
                }),
            })
            .sum();
        num / self.total()
    }

    /// Conditional variance of r₂.
    pub fn variance(&self) -> f64 {
        let r1 = self.r1;
        let num: f64 = self
            .components
            .iter()
            .map(|(wt, law)| match law {
                PairLaw::Closed(t) => wt * t.variance(),
                PairLaw::Straddle(v) => latent_2d(&self.g, |a, b| {
                    normal_pdf_var(r1, a * v.u1 + b * v.v1) * (a * v.u2 + b * v.v2)
                }),
            })
            .sum();
        num / self.total()
    }
}

/// Law of r₂ given |r₁| in a band, for comparison with binned estimates.
#[derive(Debug, Clone)]
pub struct BinConditional {
    g: StudentT,
    lo: f64,
    hi: f64,
    closed: Vec<(f64, StudentT)>,
    straddles: Vec<(f64, Straddle)>,
    total: f64,
}

impl BinConditional {
    pub fn cdf(&self, r2: f64) -> f64 {
        let closed: f64 = self.closed.iter().map(|(wt, t)| wt * t.cdf(r2)).sum();
        let straddle: f64 = self
            .straddles
            .iter()
            .map(|(_, v)| {
                latent_2d(&self.g, |a, b| {
                    band_mass(self.lo, self.hi, a * v.u1 + b * v.v1)
                        * normal_cdf(r2 / libm::sqrt(a * v.u2 + b * v.v2))
                })
            })
            .sum();
        (closed + straddle) / self.total
    }

    pub fn variance(&self) -> f64 {
        let closed: f64 = self.closed.iter().map(|(wt, t)| wt * t.variance()).sum();
        let straddle: f64 = self
            .straddles
            .iter()
            .map(|(_, v)| latent_2d(&self.g, |a, b| band_mass(self.lo, self.hi, a * v.u1 + b * v.v1) * (a * v.u2 + b * v.v2)))
            .sum();
        (closed + straddle) / self.total
    }

    /// Probability that r₁ falls in the band, averaged over positions.
    pub fn band_probability(&self, tau_c: usize) -> f64 {
        2.0 * self.total / tau_c as f64
    }
}

fn normal_pdf_var(x: f64, var: f64) -> f64 {
    libm::exp(-0.5 * x * x / var) / libm::sqrt(2.0 * PI * var)
}

/// P(lo ≤ X < hi) for X ~ N(0, var) restricted to the positive half line.
fn band_mass(lo: f64, hi: f64, var: f64) -> f64 {
    let sd = libm::sqrt(var);
    let upper = if hi.is_finite() { normal_cdf(hi / sd) } else { 1.0 };
    upper - normal_cdf(lo / sd)
}

/// σ with σ² a positive normal float; the integrand vanishes outside.
fn in_range(sigma: f64) -> bool {
    let v = sigma * sigma;
    v.is_normal() && v.is_finite()
}

/// ∫∫ ρ(σ_A) ρ(σ_B) f(σ_A², σ_B²) dσ_A dσ_B over two independent epochs.
fn latent_2d<F: Fn(f64, f64) -> f64>(g: &StudentT, f: F) -> f64 {
    let s = g.scale;
    let inner = |ua: f64| {
        let sa = s * libm::exp(ua);
        if !in_range(sa) {
            return 0.0;
        }
        let ra = g.mixing_density(sa) * sa;
        if ra == 0.0 {
            return 0.0;
        }
        ra * integrate_real_line(
            |ub| {
                let sb = s * libm::exp(ub);
                let rb = if in_range(sb) { g.mixing_density(sb) * sb } else { 0.0 };
                if rb == 0.0 {
                    0.0
                } else {
                    rb * f(sa * sa, sb * sb)
                }
            },
            0.0,
            1e-300,
            1e-9,
        )
        .value
    };
    integrate_real_line(inner, 0.0, 1e-300, 1e-9).value
}

/// Quadrature nodes (r₁, weight) over [lo, hi); the infinite tail is
/// mapped onto [0, 1) with characteristic length `scale`.
fn bin_nodes(lo: f64, hi: f64, scale: f64) -> Vec<(f64, f64)> {
    const PANELS: usize = 4;
    let gl = gauss_legendre_10();
    let mut nodes = Vec::with_capacity(PANELS * 10);
    for p in 0..PANELS {
        let (a, b) = (p as f64 / PANELS as f64, (p + 1) as f64 / PANELS as f64);
        for &(x, w) in &gl {
            let y = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let wy = 0.5 * (b - a) * w;
            if hi.is_finite() {
                nodes.push((lo + (hi - lo) * y, wy * (hi - lo)));
            } else {
                let u = 1.0 - y;
                nodes.push((lo + scale * y / u, wy * scale / (u * u)));
            }
        }
    }
    nodes
}

fn gauss_legendre_10() -> [(f64, f64); 10] {
    const X: [f64; 5] = [
        0.148_874_338_981_631_2,
        0.433_395_394_129_247_2,
        0.679_409_568_299_024_4,
        0.865_063_366_688_984_5,
        0.973_906_528_517_171_7,
    ];
    const W: [f64; 5] = [
        0.295_524_224_714_752_9,
        0.269_266_719_309_996_4,
        0.219_086_362_515_982,
        0.149_451_349_150_580_6,
        0.066_671_344_308_688_1,
    ];
    let mut out = [(0.0, 0.0); 10];
    for i in 0..5 {
        out[2 * i] = (-X[i], W[i]);
        out[2 * i + 1] = (X[i], W[i]);
    }
    out
}
