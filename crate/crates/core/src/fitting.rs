//! Estimators, goodness-of-fit distances and the tests used to choose a
//! model for an observed profile.

mod pipeline;

pub use pipeline::{
    fit_pipeline, fit_pipeline_with, CandidateFit, DependenceChoice, FitOptions, FitReport, GofKind, Histogram,
    MarginalFit, ModelClass, TestResult, latent_correlation,
};

use crate::copula::cell_of;
use crate::linalg::{self, Matrix};
use crate::profile::Profile;
use crate::rng::RandomSource;
use crate::special::chi2_sf;
use crate::stats::{mean, mid_ranks, pearson, spearman, tie_sum, variance};
use crate::univariate::trunc_normal_ln_mass;
use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, log};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),
    #[error("optimizer hit its evaluation cap (best: mu = {mu}, sigma = {sigma}, log-likelihood = {log_likelihood})")]
    NonConvergence { mu: f64, sigma: f64, log_likelihood: f64 },
    #[error("model probability of grade {0} is below 1e-12")]
    ZeroExpected(usize),
    #[error("all values are equal")]
    AllValuesEqual,
    #[error("correlation matrix is singular")]
    SingularMatrix,
    #[error("value {0} is outside the support")]
    OutOfSupport(f64),
    #[error("lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no requested family could be fitted to candidate {0}")]
    NoUsableFit(usize),
    #[error("{0}")]
    Model(alloc::string::String),
}

fn need(xs: &[f64], n: usize) -> Result<(), FitError> {
    if xs.len() < n {
        Err(FitError::TooFewSamples { needed: n, got: xs.len() })
    } else {
        Ok(())
    }
}

/// Beta parameters matching a mean and variance.
pub fn beta_from_moments(mu: f64, var: f64) -> Result<(f64, f64), FitError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(FitError::DegenerateSample("mean must lie strictly inside (0, 1)"));
    }
    if !(var > 0.0) || var >= mu * (1.0 - mu) {
        return Err(FitError::DegenerateSample("variance must lie in (0, mean(1 - mean))"));
    }
    let k = mu * (1.0 - mu) / var - 1.0;
    Ok((mu * k, (1.0 - mu) * k))
}

/// Method-of-moments beta fit (unbiased sample variance).
pub fn fit_beta_moments(samples: &[f64]) -> Result<(f64, f64), FitError> {
    need(samples, 2)?;
    beta_from_moments(mean(samples), variance(samples))
}

/// Result of the truncated-normal likelihood maximization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncNormalFit {
    pub mu: f64,
    pub sigma: f64,
    pub log_likelihood: f64,
    /// Log-likelihood at the moment start.
    pub start_log_likelihood: f64,
    pub evaluations: usize,
    pub restarts: usize,
}

const NM_TOL: f64 = 1e-8;
const NM_MAX_EVALS: usize = 2000;
const NM_MAX_RESTARTS: usize = 128;

struct Simplex {
    best: [f64; 2],
    value: f64,
    evaluations: usize,
    converged: bool,
}

/// Nelder–Mead minimization in two dimensions.
fn nelder_mead(f: &dyn Fn([f64; 2]) -> f64, start: [f64; 2], step: [f64; 2], max_evals: usize) -> Simplex {
    let mut pts = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]];
    let mut vals = [f(pts[0]), f(pts[1]), f(pts[2])];
    let mut evals = 3;
    let mut converged = false;
    while evals < max_evals {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = [pts[idx[0]], pts[idx[1]], pts[idx[2]]];
        vals = [vals[idx[0]], vals[idx[1]], vals[idx[2]]];
        let spread = vals[2] - vals[0];
        let diam = (1..3)
            .map(|i| (pts[i][0] - pts[0][0]).abs().max((pts[i][1] - pts[0][1]).abs()))
            .fold(0.0, f64::max);
        if (spread <= NM_TOL * (1.0 + vals[0].abs()) && diam <= 1e-8) || diam <= 1e-13 {
            converged = true;
            break;
        }
        let c = [(pts[0][0] + pts[1][0]) / 2.0, (pts[0][1] + pts[1][1]) / 2.0];
        let along = |t: f64| [c[0] + t * (pts[2][0] - c[0]), c[1] + t * (pts[2][1] - c[1])];
        let r = along(-1.0);
        let fr = f(r);
        evals += 1;
        if fr < vals[0] {
            let e = along(-2.0);
            let fe = f(e);
            evals += 1;
            if fe < fr {
                pts[2] = e;
                vals[2] = fe;
            } else {
                pts[2] = r;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = r;
            vals[2] = fr;
        } else {
            let (k, fk) = if fr < vals[2] {
                let k = along(-0.5);
                (k, f(k))
            } else {
                let k = along(0.5);
                (k, f(k))
            };
            evals += 1;
            if fk < vals[2].min(fr) {
                pts[2] = k;
                vals[2] = fk;
            } else {
                for i in 1..3 {
                    pts[i] = [(pts[0][0] + pts[i][0]) / 2.0, (pts[0][1] + pts[i][1]) / 2.0];
                    vals[i] = f(pts[i]);
                }
                evals += 2;
            }
        }
    }
    let i = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Simplex { best: pts[i], value: vals[i], evaluations: evals, converged }
}

/// Maximum-likelihood TruncNormal(μ, σ) on `[0, 1]`, by simplex descent on
/// `(μ, ln σ)` from the sample moments, restarted from the best point until
/// a restart no longer improves the likelihood.
pub fn fit_truncnormal_mle(samples: &[f64]) -> Result<TruncNormalFit, FitError> {
    need(samples, 2)?;
    if let Some(&x) = samples.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(FitError::OutOfSupport(x));
    }
    let n = samples.len() as f64;
    let xbar = mean(samples);
    let ss: f64 = samples.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if samples.iter().all(|&x| x == samples[0]) {
        return Err(FitError::DegenerateSample("all samples are equal"));
    }
    let half_ln_2pi = 0.5 * log(2.0 * core::f64::consts::PI);
    let neg_ll = move |p: [f64; 2]| {
        let (mu, ls) = (p[0], p[1]);
        if !(mu.abs() <= 1e3 && (-18.0..=7.0).contains(&ls)) {
            return f64::INFINITY;
        }
        let sigma = exp(ls);
        let ln_mass = trunc_normal_ln_mass(mu, sigma);
        if !ln_mass.is_finite() {
            return f64::INFINITY;
        }
        let d = xbar - mu;
        n * (ls + ln_mass + half_ln_2pi) + (ss + n * d * d) / (2.0 * sigma * sigma)
    };
    let start = [xbar, log(libm::sqrt(ss / (n - 1.0)))];
    let start_value = neg_ll(start);
    let mut run = nelder_mead(&neg_ll, start, [0.1, 0.2], NM_MAX_EVALS);
    let mut evaluations = run.evaluations;
    let mut restarts = 0;
    while run.converged && restarts < NM_MAX_RESTARTS {
        let again = nelder_mead(&neg_ll, run.best, [0.01, 0.02], NM_MAX_EVALS);
        evaluations += again.evaluations;
        restarts += 1;
        let improved = run.value - again.value > NM_TOL * (1.0 + run.value.abs());
        if again.value <= run.value {
            run = Simplex { converged: again.converged, ..again };
        }
        if !improved {
            break;
        }
    }
    let fit = TruncNormalFit {
        mu: run.best[0],
        sigma: exp(run.best[1]),
        log_likelihood: -run.value,
        start_log_likelihood: -start_value,
        evaluations,
        restarts,
    };
    if run.converged {
        Ok(fit)
    } else {
        Err(FitError::NonConvergence { mu: fit.mu, sigma: fit.sigma, log_likelihood: fit.log_likelihood })
    }
}

/// Binomial success probability: `μ̂/K`, or `μ̂/(K+1)` with
/// `k_plus_one_estimator`. Clamped to `[0, 1]`.
pub fn fit_binomial(samples: &[f64], levels: u32, k_plus_one_estimator: bool) -> Result<f64, FitError> {
    need(samples, 1)?;
    let mu = mean(samples);
    let denom = if k_plus_one_estimator { levels as f64 + 1.0 } else { levels as f64 };
    Ok((mu / denom).clamp(0.0, 1.0))
}

/// Beta-binomial parameters matching a mean and variance on `{0..K}`.
pub fn beta_binomial_from_moments(levels: u32, mu: f64, var: f64) -> Result<(f64, f64), FitError> {
    if !(mu > 0.0) {
        return Err(FitError::DegenerateSample("mean must be positive"));
    }
    let k = levels as f64;
    let denom = k * (var / mu - 1.0) + mu;
    if denom.abs() < 1e-12 {
        return Err(FitError::DegenerateSample("vanishing denominator"));
    }
    let alpha = (k * mu - mu * mu - var) / denom;
    let beta = (k - mu) * (k - mu - var / mu) / denom;
    if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(FitError::DegenerateSample("non-positive estimate"));
    }
    Ok((alpha, beta))
}

/// Method-of-moments beta-binomial fit (unbiased sample variance).
pub fn fit_betabinomial_moments(samples: &[f64], levels: u32) -> Result<(f64, f64), FitError> {
    need(samples, 2)?;
    beta_binomial_from_moments(levels, mean(samples), variance(samples))
}

/// Kolmogorov–Smirnov distance between the sample and a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Pearson χ² distance `Σ (O_k − n·p_k)² / (n·p_k)`.
pub fn chi2_statistic(counts: &[f64], probabilities: &[f64]) -> Result<f64, FitError> {
    if counts.len() != probabilities.len() {
        return Err(FitError::LengthMismatch(counts.len(), probabilities.len()));
    }
    let n: f64 = counts.iter().sum();
    if !(n >= 1.0) {
        return Err(FitError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut chi2 = 0.0;
    for (k, (&o, &p)) in counts.iter().zip(probabilities).enumerate() {
        if p < 1e-12 {
            return Err(FitError::ZeroExpected(k));
        }
        let e = n * p;
        chi2 += (o - e) * (o - e) / e;
    }
    Ok(chi2)
}

/// Counts of each grade `0..=K` in a discrete sample.
pub fn grade_counts(samples: &[f64], levels: u32) -> Vec<f64> {
    let mut counts = vec![0.0; levels as usize + 1];
    for &x in samples {
        counts[(x as usize).min(levels as usize)] += 1.0;
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

/// Sample correlation matrix. Entries involving a constant column are
/// undefined; they are set to 0 and the column is listed in `constant`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleCorrelation {
    pub matrix: Matrix,
    pub constant: Vec<usize>,
}

pub fn correlation_matrix(profile: &Profile, method: CorrelationMethod) -> Result<SampleCorrelation, FitError> {
    correlation_of_columns(&profile.columns(), method)
}

pub fn correlation_of_columns(columns: &[Vec<f64>], method: CorrelationMethod) -> Result<SampleCorrelation, FitError> {
    let m = columns.len();
    let n = columns.first().map_or(0, |c| c.len());
    if n < 3 {
        return Err(FitError::TooFewSamples { needed: 3, got: n });
    }
    let cols: Vec<Vec<f64>> = match method {
        CorrelationMethod::Pearson => columns.to_vec(),
        CorrelationMethod::Spearman => columns.iter().map(|c| mid_ranks(c)).collect(),
    };
    let constant: Vec<usize> = (0..m).filter(|&c| cols[c].iter().all(|&x| x == cols[c][0])).collect();
    let mut matrix = Matrix::identity(m);
    for i in 0..m {
        for j in i + 1..m {
            let r = pearson(&cols[i], &cols[j]).unwrap_or(0.0);
            matrix[(i, j)] = r;
            matrix[(j, i)] = r;
        }
    }
    Ok(SampleCorrelation { matrix, constant })
}

/// Spearman correlation of two samples (mid-ranks for ties).
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Option<f64> {
    spearman(x, y)
}

/// Kruskal–Wallis `H` with tie correction and its χ²(g − 1) p-value.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<(f64, f64), FitError> {
    if groups.len() < 2 {
        return Err(FitError::TooFewSamples { needed: 2, got: groups.len() });
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(FitError::TooFewSamples { needed: 1, got: 0 });
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let n = all.len() as f64;
    let correction = 1.0 - tie_sum(&all) / (n * n * n - n);
    if !(correction > 0.0) {
        return Err(FitError::AllValuesEqual);
    }
    let ranks = mid_ranks(&all);
    let mut offset = 0;
    let mut acc = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        acc += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = (12.0 / (n * (n + 1.0)) * acc - 3.0 * (n + 1.0)) / correction;
    let h = h.max(0.0);
    Ok((h, chi2_sf(h, groups.len() as f64 - 1.0)))
}

/// Bartlett's sphericity statistic `−(n − 1 − (2m + 5)/6)·ln det R` and its
/// χ²(m(m − 1)/2) p-value.
pub fn bartlett_sphericity(r: &Matrix, n: usize) -> Result<(f64, f64), FitError> {
    let m = r.rows();
    if n <= m {
        return Err(FitError::TooFewSamples { needed: m + 1, got: n });
    }
    let l = linalg::cholesky(r, 0.0).map_err(|_| FitError::SingularMatrix)?;
    let ln_det = linalg::ln_det_from_cholesky(&l);
    let mf = m as f64;
    let stat = -(n as f64 - 1.0 - (2.0 * mf + 5.0) / 6.0) * ln_det;
    let df = mf * (mf - 1.0) / 2.0;
    let p = if df == 0.0 { 1.0 } else { chi2_sf(stat, df) };
    Ok((stat, p))
}

/// Histogram distribution on `[0, 1]` with `G` equal-width bins.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMarginal {
    masses: Vec<f64>,
}

/// Bins a continuous sample into `G` classes.
pub fn empirical_marginal(samples: &[f64], classes: u32) -> Result<EmpiricalMarginal, FitError> {
    need(samples, 1)?;
    if classes == 0 {
        return Err(FitError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut masses = vec![0.0; classes as usize];
    for &x in samples {
        if !(0.0..=1.0).contains(&x) {
            return Err(FitError::OutOfSupport(x));
        }
        masses[cell_of(x, classes) as usize] += 1.0;
    }
    let n = samples.len() as f64;
    masses.iter_mut().for_each(|m| *m /= n);
    Ok(EmpiricalMarginal { masses })
}

impl EmpiricalMarginal {
    pub fn classes(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn density(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let g = self.masses.len() as u32;
        self.masses[cell_of(x, g) as usize] * g as f64
    }

    /// Piecewise-linear CDF.
    pub fn cumulative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let g = self.masses.len();
        let t = x * g as f64;
        let b = (t as usize).min(g - 1);
        let below: f64 = self.masses[..b].iter().sum();
        (below + self.masses[b] * (t - b as f64)).min(1.0)
    }

    /// Inverse of the CDF; flat stretches map to their left end.
    pub fn quantile(&self, u: f64) -> f64 {
        let g = self.masses.len();
        let mut acc = 0.0;
        for (b, &m) in self.masses.iter().enumerate() {
            if m > 0.0 && acc + m >= u {
                return ((b as f64 + (u - acc) / m) / g as f64).clamp(0.0, 1.0);
            }
            acc += m;
        }
        1.0
    }
}

/// Spreads integer scores on `{0..top}` over `[0, 1]`: `(x + U)/(top + 1)`
/// with `U` uniform on `[0, 1)`.
pub fn jitter_scores(values: &[f64], top: u32, source: &mut RandomSource) -> Vec<f64> {
    let d = top as f64 + 1.0;
    values.iter().map(|&x| (x + source.uniform()) / d).collect()
}
