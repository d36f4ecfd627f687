//! Marginal distributions of the grades received by one candidate.
//!
//! Continuous families live on `[0, 1]`: uniform, normal truncated to
//! `[0, 1]`, and beta. Discrete families live on `{0, …, K}`: discrete
//! uniform, binomial and beta-binomial.

use crate::profile::Scale;
use crate::rng::RandomSource;
use crate::special::{inc_beta, ln_beta, ln_choose, norm_cdf, norm_pdf, norm_quantile, norm_sf};
use libm::{exp, log, log1p, sqrt};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum MarginalError {
    #[error("invalid parameter {field} = {value}")]
    InvalidParameter { field: &'static str, value: f64 },
    #[error("{0} is outside the support")]
    Domain(f64),
}

/// One of the six marginal families.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case", deny_unknown_fields))]
pub enum Marginal {
    /// Uniform on `[0, 1]`.
    Uniform,
    /// Normal(μ, σ²) conditioned on `[0, 1]`.
    TruncNormal { mu: f64, sigma: f64 },
    Beta { alpha: f64, beta: f64 },
    DiscreteUniform {
        #[cfg_attr(feature = "serde", serde(rename = "K"))]
        levels: u32,
    },
    Binomial {
        #[cfg_attr(feature = "serde", serde(rename = "K"))]
        levels: u32,
        p: f64,
    },
    BetaBinomial {
        #[cfg_attr(feature = "serde", serde(rename = "K"))]
        levels: u32,
        alpha: f64,
        beta: f64,
    },
}

/// Family tag without parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    Uniform,
    TruncNormal,
    Beta,
    DiscreteUniform,
    Binomial,
    BetaBinomial,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::TruncNormal => "trunc_normal",
            Family::Beta => "beta",
            Family::DiscreteUniform => "discrete_uniform",
            Family::Binomial => "binomial",
            Family::BetaBinomial => "beta_binomial",
        }
    }

    pub fn from_name(s: &str) -> Option<Family> {
        Some(match s {
            "uniform" => Family::Uniform,
            "trunc_normal" => Family::TruncNormal,
            "beta" => Family::Beta,
            "discrete_uniform" => Family::DiscreteUniform,
            "binomial" => Family::Binomial,
            "beta_binomial" => Family::BetaBinomial,
            _ => return None,
        })
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Family::Uniform | Family::TruncNormal | Family::Beta)
    }
}

fn positive(field: &'static str, value: f64) -> Result<(), MarginalError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(MarginalError::InvalidParameter { field, value })
    }
}

fn at_least_one(levels: u32) -> Result<(), MarginalError> {
    if levels >= 1 {
        Ok(())
    } else {
        Err(MarginalError::InvalidParameter { field: "K", value: levels as f64 })
    }
}

/// Standardized truncation bounds and mass of a normal on `[0, 1]`.
#[derive(Clone, Copy)]
struct Truncation {
    a: f64,
    b: f64,
    /// Work in upper tails when both bounds lie right of the mean.
    upper: bool,
    /// Φ(a) (or 1 − Φ(a) when `upper`).
    base: f64,
    mass: f64,
}

impl Truncation {
    fn new(mu: f64, sigma: f64) -> Self {
        let a = -mu / sigma;
        let b = (1.0 - mu) / sigma;
        if a > 0.0 {
            let base = norm_sf(a);
            Truncation { a, b, upper: true, base, mass: base - norm_sf(b) }
        } else {
            let base = norm_cdf(a);
            Truncation { a, b, upper: false, base, mass: norm_cdf(b) - base }
        }
    }

    fn cdf_z(&self, z: f64) -> f64 {
        if self.upper {
            (self.base - norm_sf(z)) / self.mass
        } else {
            (norm_cdf(z) - self.base) / self.mass
        }
    }

    fn quantile_z(&self, u: f64) -> f64 {
        if self.upper {
            -norm_quantile(self.base - u * self.mass)
        } else {
            norm_quantile(self.base + u * self.mass)
        }
    }

    fn ln_mass(&self) -> f64 {
        log(self.mass)
    }
}

/// `ln P(0 ≤ X ≤ 1)` for `X ~ N(μ, σ²)`, computed in the far tail when
/// `[0, 1]` lies right of the mean.
pub fn trunc_normal_ln_mass(mu: f64, sigma: f64) -> f64 {
    Truncation::new(mu, sigma).ln_mass()
}

/// Log-likelihood of `samples` under TruncNormal(μ, σ) on `[0, 1]`.
/// Returns `-∞` where the truncated mass underflows.
pub fn trunc_normal_log_likelihood(samples: &[f64], mu: f64, sigma: f64) -> f64 {
    if !(sigma > 0.0) || !mu.is_finite() {
        return f64::NEG_INFINITY;
    }
    let t = Truncation::new(mu, sigma);
    if !(t.mass > 0.0) {
        return f64::NEG_INFINITY;
    }
    let n = samples.len() as f64;
    let mut ll = -n * (log(sigma) + t.ln_mass());
    for &x in samples {
        let z = (x - mu) / sigma;
        ll += crate::special::norm_ln_pdf(z);
    }
    ll
}

impl Marginal {
    pub fn uniform() -> Self {
        Marginal::Uniform
    }

    pub fn trunc_normal(mu: f64, sigma: f64) -> Result<Self, MarginalError> {
        let m = Marginal::TruncNormal { mu, sigma };
        m.validate()?;
        Ok(m)
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self, MarginalError> {
        let m = Marginal::Beta { alpha, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn discrete_uniform(levels: u32) -> Result<Self, MarginalError> {
        let m = Marginal::DiscreteUniform { levels };
        m.validate()?;
        Ok(m)
    }

    pub fn binomial(levels: u32, p: f64) -> Result<Self, MarginalError> {
        let m = Marginal::Binomial { levels, p };
        m.validate()?;
        Ok(m)
    }

    pub fn beta_binomial(levels: u32, alpha: f64, beta: f64) -> Result<Self, MarginalError> {
        let m = Marginal::BetaBinomial { levels, alpha, beta };
        m.validate()?;
        Ok(m)
    }

    /// Checks parameter invariants.
    pub fn validate(&self) -> Result<(), MarginalError> {
        match *self {
            Marginal::Uniform => Ok(()),
            Marginal::TruncNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(MarginalError::InvalidParameter { field: "mu", value: mu });
                }
                positive("sigma", sigma)?;
                if !(Truncation::new(mu, sigma).mass > 0.0) {
                    return Err(MarginalError::InvalidParameter { field: "mu", value: mu });
                }
                Ok(())
            }
            Marginal::Beta { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            Marginal::DiscreteUniform { levels } => at_least_one(levels),
            Marginal::Binomial { levels, p } => {
                at_least_one(levels)?;
                if (0.0..=1.0).contains(&p) {
                    Ok(())
                } else {
                    Err(MarginalError::InvalidParameter { field: "p", value: p })
                }
            }
            Marginal::BetaBinomial { levels, alpha, beta } => {
                at_least_one(levels)?;
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Marginal::Uniform => Family::Uniform,
            Marginal::TruncNormal { .. } => Family::TruncNormal,
            Marginal::Beta { .. } => Family::Beta,
            Marginal::DiscreteUniform { .. } => Family::DiscreteUniform,
            Marginal::Binomial { .. } => Family::Binomial,
            Marginal::BetaBinomial { .. } => Family::BetaBinomial,
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.family().is_continuous()
    }

    pub fn scale(&self) -> Scale {
        match *self {
            Marginal::Uniform | Marginal::TruncNormal { .. } | Marginal::Beta { .. } => Scale::Continuous,
            Marginal::DiscreteUniform { levels }
            | Marginal::Binomial { levels, .. }
            | Marginal::BetaBinomial { levels, .. } => Scale::Discrete { levels },
        }
    }

    /// Probability mass of grade `k` (discrete families only).
    fn pmf(&self, k: u32) -> f64 {
        match *self {
            Marginal::DiscreteUniform { levels } => {
                if k <= levels {
                    1.0 / (levels as f64 + 1.0)
                } else {
                    0.0
                }
            }
            Marginal::Binomial { levels, p } => {
                if k > levels {
                    return 0.0;
                }
                if p == 0.0 {
                    return if k == 0 { 1.0 } else { 0.0 };
                }
                if p == 1.0 {
                    return if k == levels { 1.0 } else { 0.0 };
                }
                exp(ln_choose(levels, k) + k as f64 * log(p) + (levels - k) as f64 * log1p(-p))
            }
            Marginal::BetaBinomial { levels, alpha, beta } => {
                if k > levels {
                    return 0.0;
                }
                exp(ln_choose(levels, k) + ln_beta(k as f64 + alpha, (levels - k) as f64 + beta)
                    - ln_beta(alpha, beta))
            }
            _ => 0.0,
        }
    }

    /// Probabilities of grades `0..=K` (discrete families only).
    pub fn probabilities(&self) -> Option<alloc::vec::Vec<f64>> {
        let levels = self.scale().levels()?;
        Some((0..=levels).map(|k| self.pmf(k)).collect())
    }

    /// Density (continuous) or probability mass (discrete) at `x`.
    pub fn density(&self, x: f64) -> Result<f64, MarginalError> {
        if !self.scale().contains(x) {
            return Err(MarginalError::Domain(x));
        }
        Ok(match *self {
            Marginal::Uniform => 1.0,
            Marginal::TruncNormal { mu, sigma } => {
                let t = Truncation::new(mu, sigma);
                norm_pdf((x - mu) / sigma) / (sigma * t.mass)
            }
            Marginal::Beta { alpha, beta } => beta_pdf(x, alpha, beta),
            _ => self.pmf(x as u32),
        })
    }

    /// CDF; 0 below the support and 1 above it.
    pub fn cumulative(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            Marginal::Uniform => x.min(1.0),
            Marginal::TruncNormal { mu, sigma } => {
                if x >= 1.0 {
                    return 1.0;
                }
                let t = Truncation::new(mu, sigma);
                t.cdf_z((x - mu) / sigma).clamp(0.0, 1.0)
            }
            Marginal::Beta { alpha, beta } => {
                if x >= 1.0 {
                    1.0
                } else {
                    inc_beta(x, alpha, beta).unwrap_or(f64::NAN)
                }
            }
            _ => {
                let levels = self.scale().levels().unwrap_or(0);
                let top = libm::floor(x);
                if top >= levels as f64 {
                    return 1.0;
                }
                let top = top as u32;
                (0..=top).map(|k| self.pmf(k)).sum::<f64>().min(1.0)
            }
        }
    }

    /// Generalized inverse of the CDF. For discrete families, the smallest
    /// grade whose CDF reaches `u`.
    pub fn quantile(&self, u: f64) -> Result<f64, MarginalError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(MarginalError::Domain(u));
        }
        Ok(match *self {
            Marginal::Uniform => u,
            Marginal::TruncNormal { mu, sigma } => trunc_normal_quantile(mu, sigma, u),
            Marginal::Beta { alpha, beta } => beta_quantile(alpha, beta, u),
            _ => {
                let levels = self.scale().levels().unwrap_or(0);
                let mut acc = 0.0;
                for k in 0..levels {
                    acc += self.pmf(k);
                    if acc >= u {
                        return Ok(k as f64);
                    }
                }
                levels as f64
            }
        })
    }

    /// One draw from the marginal.
    pub fn draw(&self, source: &mut RandomSource) -> f64 {
        match *self {
            Marginal::Uniform => source.uniform(),
            Marginal::TruncNormal { mu, sigma } => trunc_normal_quantile(mu, sigma, source.uniform_open()),
            Marginal::Beta { alpha, beta } => beta_draw(alpha, beta, source),
            Marginal::DiscreteUniform { levels } => source.below(levels as u64 + 1) as f64,
            Marginal::Binomial { levels, p } => binomial_draw(levels, p, source),
            Marginal::BetaBinomial { levels, alpha, beta } => {
                let p = beta_draw(alpha, beta, source);
                binomial_draw(levels, p, source)
            }
        }
    }

    /// `(mean, variance)` in closed form.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform => (0.5, 1.0 / 12.0),
            Marginal::TruncNormal { mu, sigma } => {
                let t = Truncation::new(mu, sigma);
                let (pa, pb) = (norm_pdf(t.a), norm_pdf(t.b));
                let shift = (pa - pb) / t.mass;
                let mean = mu + sigma * shift;
                let var = sigma * sigma * (1.0 + (t.a * pa - t.b * pb) / t.mass - shift * shift);
                (mean, var)
            }
            Marginal::Beta { alpha, beta } => {
                let s = alpha + beta;
                (alpha / s, alpha * beta / (s * s * (s + 1.0)))
            }
            Marginal::DiscreteUniform { levels } => {
                let k = levels as f64;
                (k / 2.0, ((k + 1.0) * (k + 1.0) - 1.0) / 12.0)
            }
            Marginal::Binomial { levels, p } => {
                let k = levels as f64;
                (k * p, k * p * (1.0 - p))
            }
            Marginal::BetaBinomial { levels, alpha, beta } => {
                let k = levels as f64;
                let s = alpha + beta;
                (k * alpha / s, k * alpha * beta * (s + k) / (s * s * (s + 1.0)))
            }
        }
    }
}

fn beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x == 0.0 {
        return if a < 1.0 { f64::INFINITY } else if a == 1.0 { exp(-ln_beta(a, b)) } else { 0.0 };
    }
    if x == 1.0 {
        return if b < 1.0 { f64::INFINITY } else if b == 1.0 { exp(-ln_beta(a, b)) } else { 0.0 };
    }
    exp((a - 1.0) * log(x) + (b - 1.0) * log1p(-x) - ln_beta(a, b))
}

fn trunc_normal_quantile(mu: f64, sigma: f64, u: f64) -> f64 {
    let t = Truncation::new(mu, sigma);
    if !(t.mass > 0.0) {
        return if mu < 0.5 { 0.0 } else { 1.0 };
    }
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let mut x = (mu + sigma * t.quantile_z(u)).clamp(0.0, 1.0);
    // Newton polish against the truncated CDF.
    for _ in 0..2 {
        let z = (x - mu) / sigma;
        let f = t.cdf_z(z) - u;
        let d = norm_pdf(z) / (sigma * t.mass);
        if !(d > 0.0) || f == 0.0 {
            break;
        }
        x = (x - f / d).clamp(0.0, 1.0);
    }
    x
}

/// Beta quantile by safeguarded Newton iteration on `I_x(a, b)` inside a
/// shrinking bisection bracket.
pub fn beta_quantile(a: f64, b: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = a / (a + b);
    for _ in 0..200 {
        let f = match inc_beta(x, a, b) {
            Ok(v) => v - u,
            Err(_) => break,
        };
        if libm::fabs(f) <= 1e-14 {
            return x;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = beta_pdf(x, a, b);
        let newton = x - f / d;
        x = if d.is_finite() && d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-16 {
            break;
        }
    }
    x
}

/// Natural log of a Gamma(shape, 1) draw (Marsaglia–Tsang squeeze; shapes
/// below one use the `G(a+1)·U^{1/a}` boost, kept in log space so tiny
/// shapes do not underflow).
pub fn ln_gamma_draw(shape: f64, source: &mut RandomSource) -> f64 {
    if shape < 1.0 {
        let u = source.uniform_open();
        return ln_gamma_draw(shape + 1.0, source) + log(u) / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / sqrt(9.0 * d);
    loop {
        let x = source.standard_normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = source.uniform_open();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || log(u) < 0.5 * x2 + d * (1.0 - v + log(v)) {
            return log(d) + log(v);
        }
    }
}

/// Gamma(shape, 1) draw.
pub fn gamma_draw(shape: f64, source: &mut RandomSource) -> f64 {
    exp(ln_gamma_draw(shape, source))
}

/// Beta draw as `X / (X + Y)` with independent gammas.
pub fn beta_draw(a: f64, b: f64, source: &mut RandomSource) -> f64 {
    let lx = ln_gamma_draw(a, source);
    let ly = ln_gamma_draw(b, source);
    1.0 / (1.0 + exp(ly - lx))
}

/// Binomial draw by inversion.
pub fn binomial_draw(levels: u32, p: f64, source: &mut RandomSource) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return levels as f64;
    }
    let u = source.uniform();
    let (lp, lq) = (log(p), log1p(-p));
    let mut acc = 0.0;
    for k in 0..levels {
        acc += exp(ln_choose(levels, k) + k as f64 * lp + (levels - k) as f64 * lq);
        if u < acc {
            return k as f64;
        }
    }
    levels as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use alloc::vec;
    use alloc::vec::Vec;
    use libm::pow as powf;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn all_families() -> Vec<Marginal> {
        vec![
            Marginal::Uniform,
            Marginal::TruncNormal { mu: 0.5, sigma: 0.35 },
            Marginal::TruncNormal { mu: -0.3, sigma: 0.2 },
            Marginal::TruncNormal { mu: 1.4, sigma: 0.25 },
            Marginal::Beta { alpha: 5.0, beta: 2.0 },
            Marginal::Beta { alpha: 0.7, beta: 0.5 },
            Marginal::DiscreteUniform { levels: 6 },
            Marginal::Binomial { levels: 6, p: 0.5 },
            Marginal::Binomial { levels: 10, p: 0.13 },
            Marginal::BetaBinomial { levels: 6, alpha: 5.0, beta: 2.0 },
            Marginal::BetaBinomial { levels: 6, alpha: 0.5, beta: 0.5 },
        ]
    }

    #[test]
    fn density_examples() {
        assert_eq!(Marginal::Uniform.density(0.37), Ok(1.0));
        close(Marginal::Beta { alpha: 5.0, beta: 2.0 }.density(0.5).unwrap(), 0.9375, 1e-12);
        close(Marginal::Binomial { levels: 6, p: 0.5 }.density(3.0).unwrap(), 0.3125, 1e-12);
        assert!(Marginal::Uniform.density(1.5).is_err());
        assert!(Marginal::Binomial { levels: 6, p: 0.5 }.density(2.5).is_err());
    }

    #[test]
    fn cumulative_examples() {
        close(Marginal::Uniform.cumulative(0.3), 0.3, 1e-15);
        close(Marginal::Beta { alpha: 1.0, beta: 1.0 }.cumulative(0.42), 0.42, 1e-12);
        close(Marginal::Binomial { levels: 6, p: 0.5 }.cumulative(2.0), 22.0 / 64.0, 1e-12);
        assert_eq!(Marginal::Uniform.cumulative(-3.0), 0.0);
        assert_eq!(Marginal::Beta { alpha: 2.0, beta: 3.0 }.cumulative(7.0), 1.0);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(Marginal::Uniform.quantile(0.25), Ok(0.25));
        close(Marginal::Beta { alpha: 2.0, beta: 2.0 }.quantile(0.5).unwrap(), 0.5, 1e-10);
        assert_eq!(Marginal::BetaBinomial { levels: 6, alpha: 1.0, beta: 1.0 }.quantile(0.5), Ok(3.0));
        assert!(Marginal::Uniform.quantile(1.2).is_err());
    }

    #[test]
    fn moment_examples() {
        assert_eq!(Marginal::Binomial { levels: 6, p: 0.5 }.moments(), (3.0, 1.5));
        let (m, v) = Marginal::Beta { alpha: 5.0, beta: 2.0 }.moments();
        close(m, 5.0 / 7.0, 1e-15);
        close(v, 10.0 / (49.0 * 8.0), 1e-15);
        let (m, v) = Marginal::BetaBinomial { levels: 6, alpha: 1.0, beta: 1.0 }.moments();
        close(m, 3.0, 1e-12);
        close(v, 4.0, 1e-12);
    }

    #[test]
    fn pmfs_sum_to_one() {
        for m in all_families().iter().filter(|m| !m.is_continuous()) {
            let s: f64 = m.probabilities().unwrap().iter().sum();
            close(s, 1.0, 1e-12);
        }
    }

    #[test]
    fn trunc_normal_pdf_integrates_to_one() {
        for m in [
            Marginal::TruncNormal { mu: 0.5, sigma: 0.35 },
            Marginal::TruncNormal { mu: -0.3, sigma: 0.2 },
            Marginal::TruncNormal { mu: 1.4, sigma: 0.25 },
        ] {
            let n = 10_000;
            let h = 1.0 / n as f64;
            let mut s = 0.5 * (m.density(0.0).unwrap() + m.density(1.0).unwrap());
            for i in 1..n {
                s += m.density(i as f64 * h).unwrap();
            }
            close(s * h, 1.0, 1e-6);
        }
    }

    #[test]
    fn trunc_normal_moments_match_quadrature() {
        let m = Marginal::TruncNormal { mu: 0.2, sigma: 0.3 };
        let n = 20_000;
        let h = 1.0 / n as f64;
        let (mut e1, mut e2) = (0.0, 0.0);
        for i in 0..=n {
            let x = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let d = m.density(x).unwrap();
            e1 += w * x * d;
            e2 += w * x * x * d;
        }
        let (e1, e2) = (e1 * h, e2 * h);
        let (mean, var) = m.moments();
        close(mean, e1, 1e-7);
        close(var, e2 - e1 * e1, 1e-7);
    }

    // Simpson quadrature of ∫ Binomial(K, q)(k) · Beta(α, β)(q) dq after the
    // substitution q = sin²θ, which removes the endpoint singularities.
    fn beta_binomial_by_mixture(levels: u32, k: u32, alpha: f64, beta: f64) -> f64 {
        let n = 20_000;
        let half_pi = core::f64::consts::FRAC_PI_2;
        let h = half_pi / n as f64;
        let f = |theta: f64| {
            let (s, c) = (libm::sin(theta), libm::cos(theta));
            let q = s * s;
            let bin = exp(ln_choose(levels, k)) * powf(q, k as f64) * powf(1.0 - q, (levels - k) as f64);
            let jac = 2.0 * s * c;
            if jac == 0.0 { 0.0 } else { bin * beta_pdf(q, alpha, beta) * jac }
        };
        let mut s = f(0.0) + f(half_pi);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn beta_binomial_is_a_binomial_mixture() {
        for &(levels, alpha, beta) in &[(6u32, 5.0, 2.0), (4, 2.5, 3.5), (10, 3.0, 1.5)] {
            let m = Marginal::BetaBinomial { levels, alpha, beta };
            for k in 0..=levels {
                close(m.density(k as f64).unwrap(), beta_binomial_by_mixture(levels, k, alpha, beta), 1e-8);
            }
        }
    }

    #[test]
    fn beta_draws() {
        let m = Marginal::Beta { alpha: 5.0, beta: 2.0 };
        let mut s = derive_stream(11, 0);
        let draws: Vec<f64> = (0..100_000).map(|_| m.draw(&mut s)).collect();
        assert!(draws.iter().all(|&x| x > 0.0 && x < 1.0));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        close(mean, 5.0 / 7.0, 0.01);
    }

    #[test]
    fn binomial_draws() {
        let m = Marginal::Binomial { levels: 6, p: 0.5 };
        let mut s = derive_stream(12, 0);
        let draws: Vec<f64> = (0..100_000).map(|_| m.draw(&mut s)).collect();
        assert!(draws.iter().all(|&x| (0.0..=6.0).contains(&x) && libm::floor(x) == x));
        close(draws.iter().sum::<f64>() / draws.len() as f64, 3.0, 0.05);
    }

    #[test]
    fn monte_carlo_means_for_every_family() {
        for (i, m) in all_families().iter().enumerate() {
            let mut s = derive_stream(99, i as u64);
            let n = 100_000;
            let mean = (0..n).map(|_| m.draw(&mut s)).sum::<f64>() / n as f64;
            let (mu, var) = m.moments();
            let tol = 4.0 * sqrt(var / n as f64);
            assert!((mean - mu).abs() <= tol, "{m:?}: {mean} vs {mu} ± {tol}");
        }
    }

    #[test]
    fn gamma_draw_moments() {
        for &shape in &[0.3, 1.0, 2.5, 9.0] {
            let mut s = derive_stream(5, (shape * 10.0) as u64);
            let n = 100_000;
            let xs: Vec<f64> = (0..n).map(|_| gamma_draw(shape, &mut s)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
            assert!((mean - shape).abs() < 4.0 * sqrt(shape / n as f64), "shape {shape}: mean {mean}");
            assert!((var - shape).abs() < 0.05 * shape + 0.02, "shape {shape}: var {var}");
        }
    }

    #[test]
    fn validation() {
        assert!(Marginal::beta(0.0, 1.0).is_err());
        assert!(Marginal::trunc_normal(0.5, -1.0).is_err());
        assert!(Marginal::binomial(6, 1.2).is_err());
        assert!(Marginal::discrete_uniform(0).is_err());
        assert!(Marginal::beta_binomial(3, 1.0, f64::NAN).is_err());
    }

    fn continuous_marginal() -> impl Strategy<Value = Marginal> {
        prop_oneof![
            Just(Marginal::Uniform),
            (-0.5f64..1.5, 0.05f64..2.0).prop_map(|(mu, sigma)| Marginal::TruncNormal { mu, sigma }),
            (0.3f64..20.0, 0.3f64..20.0).prop_map(|(alpha, beta)| Marginal::Beta { alpha, beta }),
        ]
    }

    fn discrete_marginal() -> impl Strategy<Value = Marginal> {
        prop_oneof![
            (1u32..30).prop_map(|levels| Marginal::DiscreteUniform { levels }),
            (1u32..30, 0.0f64..=1.0).prop_map(|(levels, p)| Marginal::Binomial { levels, p }),
            (1u32..30, 0.2f64..20.0, 0.2f64..20.0)
                .prop_map(|(levels, alpha, beta)| Marginal::BetaBinomial { levels, alpha, beta }),
        ]
    }

    proptest! {
        #[test]
        fn continuous_quantile_inverts_cdf(m in continuous_marginal(), x in 0.001f64..0.999) {
            let u = m.cumulative(x);
            prop_assume!(u > 1e-9 && u < 1.0 - 1e-9);
            let q = m.quantile(u).unwrap();
            prop_assert!((m.cumulative(q) - u).abs() <= 1e-10, "{:?} x={} u={} q={}", m, x, u, q);
            prop_assert!((q - x).abs() <= 1e-8 || m.density(x).unwrap() < 1e-6, "{:?} x={} q={}", m, x, q);
        }

        #[test]
        fn cdf_monotone_density_nonnegative(m in continuous_marginal(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(m.cumulative(lo) <= m.cumulative(hi) + 1e-15);
            prop_assert!(m.density(lo).unwrap() >= 0.0);
        }

        #[test]
        fn discrete_quantile_is_smallest_grade(m in discrete_marginal(), u in 0.0f64..=1.0) {
            let k = m.quantile(u).unwrap();
            let levels = m.scale().levels().unwrap() as f64;
            prop_assert!(m.cumulative(k) >= u - 1e-12 || k == levels);
            if k > 0.0 {
                prop_assert!(m.cumulative(k - 1.0) < u);
            }
            let probs = m.probabilities().unwrap();
            prop_assert!(probs.iter().all(|&p| p >= 0.0));
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
