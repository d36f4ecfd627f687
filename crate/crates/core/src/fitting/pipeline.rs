//! The four-step model-selection pipeline: fit marginals, test whether they
//! are identical, test independence, assemble a generator model.

use super::*;
use crate::copula::{fit_checkerboard, pseudo_observations, CorrelationMatrix};
use crate::generators::{Dependence, GeneratorModel};
use crate::profile::Scale;
use crate::special::spearman_to_gaussian;
use crate::univariate::{Family, Marginal};
use alloc::format;
use alloc::string::{String, ToString};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DependenceChoice {
    Gaussian,
    /// Checkerboard copula with `B` cells per axis.
    Checkerboard(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Families to try; `None` uses every family of the profile's scale.
    pub families: Option<Vec<Family>>,
    /// Significance level of the identical-marginals and independence tests.
    pub level: f64,
    pub dependence: DependenceChoice,
    /// Binomial `p̂ = μ̂/(K+1)` instead of `μ̂/K`.
    pub k_plus_one_estimator: bool,
    /// Also bin each candidate into `G` classes.
    pub histogram_classes: Option<u32>,
    /// Sample size above which the report warns that the tests reject
    /// negligible departures.
    pub large_n: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            families: None,
            level: 0.05,
            dependence: DependenceChoice::Gaussian,
            k_plus_one_estimator: false,
            histogram_classes: None,
            large_n: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GofKind {
    /// Kolmogorov–Smirnov distance against the fitted CDF.
    Ks,
    /// χ² distance against the fitted grade probabilities.
    Chi2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginalFit {
    pub family: Family,
    /// Fitted marginal, absent when estimation failed.
    pub marginal: Option<Marginal>,
    pub gof: Option<f64>,
    pub gof_kind: GofKind,
    pub n_used: usize,
    pub note: Option<String>,
}

/// Binned sample of one candidate: `G` equal bins on `[0, 1]` or one class
/// per grade.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub classes: u32,
    pub masses: Vec<f64>,
    /// KS distance between the binned distribution and the sample
    /// (continuous scale only).
    pub ks: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateFit {
    pub candidate: String,
    pub fits: Vec<MarginalFit>,
    /// Index in `fits` of the smallest distance.
    pub best: Option<usize>,
    pub histogram: Option<Histogram>,
}

impl CandidateFit {
    pub fn best_marginal(&self) -> Option<&Marginal> {
        self.best.and_then(|i| self.fits[i].marginal.as_ref())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelClass {
    Iid,
    Idd,
    Did,
    Ddd,
}

impl ModelClass {
    pub fn name(&self) -> &'static str {
        match self {
            ModelClass::Iid => "IID",
            ModelClass::Idd => "IDD",
            ModelClass::Did => "DID",
            ModelClass::Ddd => "DDD",
        }
    }

    pub fn from_verdicts(identical: bool, independent: bool) -> Self {
        match (identical, independent) {
            (true, true) => ModelClass::Iid,
            (false, true) => ModelClass::Idd,
            (true, false) => ModelClass::Did,
            (false, false) => ModelClass::Ddd,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub n: usize,
    pub m: usize,
    pub scale: Scale,
    pub candidates: Vec<CandidateFit>,
    /// Fits on all evaluations pooled together.
    pub pooled: CandidateFit,
    pub kruskal_wallis: Option<TestResult>,
    pub pearson: Option<SampleCorrelation>,
    pub spearman: Option<SampleCorrelation>,
    pub bartlett: Option<TestResult>,
    pub level: f64,
    pub identical: bool,
    pub independent: bool,
    pub selected_class: ModelClass,
    /// Latent Gaussian-copula correlation, for dependent classes.
    pub copula_correlation: Option<Matrix>,
    pub model: GeneratorModel,
    pub warnings: Vec<String>,
}

fn default_families(scale: Scale) -> Vec<Family> {
    if scale.is_continuous() {
        vec![Family::Uniform, Family::TruncNormal, Family::Beta]
    } else {
        vec![Family::DiscreteUniform, Family::Binomial, Family::BetaBinomial]
    }
}

fn fit_family(family: Family, xs: &[f64], scale: Scale, k_plus_one_estimator: bool) -> MarginalFit {
    let levels = scale.levels().unwrap_or(0);
    let mut note = None;
    let estimate: Result<Marginal, FitError> = match family {
        Family::Uniform => Ok(Marginal::Uniform),
        Family::TruncNormal => match fit_truncnormal_mle(xs) {
            Ok(f) => Ok(Marginal::TruncNormal { mu: f.mu, sigma: f.sigma }),
            Err(FitError::NonConvergence { mu, sigma, .. }) => {
                note = Some(String::from("optimizer hit its evaluation cap; best parameters reported"));
                Ok(Marginal::TruncNormal { mu, sigma })
            }
            Err(e) => Err(e),
        },
        Family::Beta => fit_beta_moments(xs).map(|(alpha, beta)| Marginal::Beta { alpha, beta }),
        Family::DiscreteUniform => Ok(Marginal::DiscreteUniform { levels }),
        Family::Binomial => fit_binomial(xs, levels, k_plus_one_estimator).map(|p| Marginal::Binomial { levels, p }),
        Family::BetaBinomial => {
            fit_betabinomial_moments(xs, levels).map(|(alpha, beta)| Marginal::BetaBinomial { levels, alpha, beta })
        }
    };
    let gof_kind = if scale.is_continuous() { GofKind::Ks } else { GofKind::Chi2 };
    let (marginal, gof) = match estimate {
        Ok(mg) => {
            let gof = if scale.is_continuous() {
                Ok(ks_statistic(xs, |x| mg.cumulative(x)))
            } else {
                chi2_statistic(&grade_counts(xs, levels), &mg.probabilities().unwrap_or_default())
            };
            match gof {
                Ok(g) => (Some(mg), Some(g)),
                Err(e) => {
                    note = Some(e.to_string());
                    (Some(mg), None)
                }
            }
        }
        Err(e) => {
            note = Some(e.to_string());
            (None, None)
        }
    };
    MarginalFit { family, marginal, gof, gof_kind, n_used: xs.len(), note }
}

fn histogram(xs: &[f64], scale: Scale, classes: u32) -> Option<Histogram> {
    match scale.levels() {
        None => {
            let e = empirical_marginal(xs, classes).ok()?;
            let ks = ks_statistic(xs, |x| e.cumulative(x));
            Some(Histogram { classes, masses: e.masses().to_vec(), ks: Some(ks) })
        }
        Some(k) => {
            let n = xs.len() as f64;
            let masses = grade_counts(xs, k).into_iter().map(|c| c / n).collect();
            Some(Histogram { classes: k + 1, masses, ks: None })
        }
    }
}

fn fit_candidate(name: &str, xs: &[f64], scale: Scale, families: &[Family], opts: &FitOptions) -> CandidateFit {
    let fits: Vec<MarginalFit> = families.iter().map(|&f| fit_family(f, xs, scale, opts.k_plus_one_estimator)).collect();
    let best = fits
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.gof.map(|g| (i, g)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    let histogram = opts.histogram_classes.and_then(|g| histogram(xs, scale, g));
    CandidateFit { candidate: String::from(name), fits, best, histogram }
}

/// Runs the pipeline on the current thread.
pub fn fit_pipeline(profile: &Profile, opts: &FitOptions) -> Result<FitReport, FitError> {
    fit_pipeline_with(profile, opts, |count, fit| (0..count).map(fit).collect())
}

/// Runs the pipeline, handing the `m + 1` independent marginal fits (one per
/// candidate, then the pooled sample) to `map`, which must return them in
/// index order.
pub fn fit_pipeline_with<F>(profile: &Profile, opts: &FitOptions, map: F) -> Result<FitReport, FitError>
where
    F: FnOnce(usize, &(dyn Fn(usize) -> CandidateFit + Sync)) -> Vec<CandidateFit>,
{
    let (n, m, scale) = (profile.n_voters(), profile.n_candidates(), profile.scale());
    if n < 10 {
        return Err(FitError::TooFewSamples { needed: 10, got: n });
    }
    let mut warnings = Vec::new();
    let requested = opts.families.clone().unwrap_or_else(|| default_families(scale));
    let families: Vec<Family> = requested.iter().copied().filter(|f| f.is_continuous() == scale.is_continuous()).collect();
    for f in requested.iter().filter(|f| f.is_continuous() != scale.is_continuous()) {
        warnings.push(format!("family {} does not match the {scale} scale; skipped", f.name()));
    }
    if families.is_empty() {
        return Err(FitError::NoUsableFit(0));
    }
    if n > opts.large_n {
        warnings.push(format!(
            "n = {n}: at this sample size the tests reject negligible departures; compare the raw distances too"
        ));
    }

    // Step 1: marginals
    let columns = profile.columns();
    let pooled: Vec<f64> = profile.values().to_vec();
    let names = profile.names();
    let task = |i: usize| {
        if i < m {
            fit_candidate(&names[i], &columns[i], scale, &families, opts)
        } else {
            fit_candidate("pooled", &pooled, scale, &families, opts)
        }
    };
    let mut fits = map(m + 1, &task);
    let pooled_fit = fits.pop().expect("pooled fit");
    let candidates = fits;
    for (c, f) in candidates.iter().enumerate() {
        if f.best.is_none() {
            return Err(FitError::NoUsableFit(c));
        }
        for mf in &f.fits {
            if let Some(note) = &mf.note {
                warnings.push(format!("{}: {}: {note}", f.candidate, mf.family.name()));
            }
        }
    }

    let mut report = FitReport {
        n,
        m,
        scale,
        candidates,
        pooled: pooled_fit,
        kruskal_wallis: None,
        pearson: None,
        spearman: None,
        bartlett: None,
        level: opts.level,
        identical: true,
        independent: true,
        selected_class: ModelClass::Iid,
        copula_correlation: None,
        model: GeneratorModel::Iid { marginal: Marginal::Uniform, m },
        warnings,
    };

    if m == 1 {
        report.warnings.push(String::from(
            "single candidate: identical-marginals and independence steps skipped; IID and IDD coincide",
        ));
        let marginal = report.pooled.best_marginal().cloned().ok_or(FitError::NoUsableFit(0))?;
        report.model = GeneratorModel::Iid { marginal, m: 1 };
        return Ok(report);
    }

    // Step 2: identical marginals
    let groups: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    match kruskal_wallis(&groups) {
        Ok((statistic, p)) => {
            report.kruskal_wallis = Some(TestResult { statistic, p });
            report.identical = p >= opts.level;
        }
        Err(e) => report.warnings.push(format!("Kruskal-Wallis: {e}; marginals treated as identical")),
    }

    // Step 3: independence
    let pearson = correlation_of_columns(&columns, CorrelationMethod::Pearson)?;
    let spearman = correlation_of_columns(&columns, CorrelationMethod::Spearman)?;
    for &c in &pearson.constant {
        report.warnings.push(format!("{} is constant; its correlations are undefined and reported as 0", names[c]));
    }
    match bartlett_sphericity(&pearson.matrix, n) {
        Ok((statistic, p)) => {
            report.bartlett = Some(TestResult { statistic, p });
            report.independent = p >= opts.level;
        }
        Err(FitError::SingularMatrix) => {
            report.warnings.push(String::from("Pearson correlation matrix is singular; candidates treated as dependent"));
            report.bartlett = Some(TestResult { statistic: f64::INFINITY, p: 0.0 });
            report.independent = false;
        }
        Err(e) => return Err(e),
    }

    // Step 4: assemble
    report.selected_class = ModelClass::from_verdicts(report.identical, report.independent);
    let pooled_marginal = report.pooled.best_marginal().cloned().ok_or(FitError::NoUsableFit(0))?;
    let per_candidate: Vec<Marginal> = report.candidates.iter().map(|c| c.best_marginal().cloned().unwrap()).collect();
    let marginals = if report.identical { vec![pooled_marginal.clone(); m] } else { per_candidate };
    report.model = match report.selected_class {
        ModelClass::Iid => GeneratorModel::Iid { marginal: pooled_marginal, m },
        ModelClass::Idd => GeneratorModel::Idd { marginals },
        ModelClass::Did | ModelClass::Ddd => {
            let dependence = match opts.dependence {
                DependenceChoice::Gaussian => {
                    let (r, repaired) = latent_correlation(&spearman.matrix)?;
                    if repaired {
                        report.warnings.push(String::from(
                            "latent correlation estimate was not positive definite and has been repaired",
                        ));
                    }
                    report.copula_correlation = Some(r.matrix().clone());
                    Dependence::GaussianCopula { correlation: r.to_rows(), repair: false }
                }
                DependenceChoice::Checkerboard(b) => {
                    let po = pseudo_observations(profile).map_err(|e| FitError::Model(e.to_string()))?;
                    let cb = fit_checkerboard(&po.values, b).map_err(|e| FitError::Model(e.to_string()))?;
                    Dependence::Checkerboard(cb)
                }
            };
            GeneratorModel::Copula { dependence, marginals }
        }
    };
    report.pearson = Some(pearson);
    report.spearman = Some(spearman);
    Ok(report)
}

/// Gaussian-copula correlation from a Spearman matrix, `2 sin(π ρ_S / 6)`
/// entrywise, repaired to the nearest positive definite matrix if needed.
pub fn latent_correlation(spearman: &Matrix) -> Result<(CorrelationMatrix, bool), FitError> {
    let m = spearman.rows();
    let mut r = Matrix::identity(m);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                r[(i, j)] = spearman_to_gaussian(spearman[(i, j)]).clamp(-1.0, 1.0);
            }
        }
    }
    let (eig, _) = linalg::symmetric_eigen(&r);
    let repaired = eig[0] < 1e-8;
    let c = if repaired {
        CorrelationMatrix::from_matrix(crate::copula::nearest_pd(&r), false)
    } else {
        CorrelationMatrix::from_matrix(r, false)
    }
    .map_err(|e| FitError::Model(e.to_string()))?;
    Ok((c, repaired))
}
