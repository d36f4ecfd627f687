//! Joint models over the candidates and profile generation.
//!
//! Rows of a profile are independent draws from one joint law over
//! `Scale^m`. Generation works in blocks of [`BLOCK_SIZE`] voters; block `b`
//! draws from child stream `b` of the caller's source, so a profile does not
//! depend on how blocks are scheduled across threads.

use crate::copula::{CheckerboardCopula, CorrelationMatrix, GaussianCopula};
use crate::linalg::{self, Matrix};
use crate::profile::{discretize, Profile, Scale};
use crate::rng::RandomSource;
use crate::univariate::{binomial_draw, ln_gamma_draw, Marginal, MarginalError};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use libm::{exp, sqrt};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Voters per generation block.
pub const BLOCK_SIZE: usize = 4096;

/// Child stream reserved for randomly placed candidates.
const CANDIDATE_STREAM: u64 = 1 << 63;

/// A model validation failure, located by the JSON path of the field at
/// fault (`p`, `marginals[1].alpha`, …).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelError {
    pub path: String,
    pub message: String,
}

impl ModelError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

/// Distance-to-evaluation map of the spatial model.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case", deny_unknown_fields))]
pub enum LinkFunction {
    /// `max(0, 1 − ℓ·δ)`.
    #[cfg_attr(feature = "serde", serde(rename = "linear"))]
    LinearTruncated { ell: f64 },
    /// `1 / (1 + exp(λ(β·δ − 1)))`.
    Sigmoid {
        lambda: f64,
        #[cfg_attr(feature = "serde", serde(rename = "beta"))]
        beta_link: f64,
    },
}

impl LinkFunction {
    pub fn validate(&self) -> Result<(), ModelError> {
        let check = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::new(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            LinkFunction::LinearTruncated { ell } => check("ell", ell),
            LinkFunction::Sigmoid { lambda, beta_link } => {
                check("lambda", lambda)?;
                check("beta", beta_link)
            }
        }
    }

    /// Evaluation at distance `delta ≥ 0`.
    pub fn apply(&self, delta: f64) -> f64 {
        link_apply(self, delta)
    }
}

pub fn link_apply(link: &LinkFunction, delta: f64) -> f64 {
    match *link {
        LinkFunction::LinearTruncated { ell } => (1.0 - ell * delta).max(0.0),
        LinkFunction::Sigmoid { lambda, beta_link } => 1.0 / (1.0 + exp(lambda * (beta_link * delta - 1.0))),
    }
}

/// One Gaussian component of a voter distribution. The spread is either a
/// full covariance matrix or an isotropic standard deviation.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct GaussianComponent {
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub weight: f64,
    pub mean: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub cov: Option<Vec<Vec<f64>>>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub sigma: Option<f64>,
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

/// Where voters (or random candidates) live in the latent space.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "dist", rename_all = "snake_case"))]
pub enum VoterDistribution {
    /// Uniform on `[0, 1]^d`.
    Uniform,
    Gaussian(GaussianComponent),
    GaussianMixture { components: Vec<GaussianComponent> },
}

#[derive(Clone, Debug)]
enum PreparedDist {
    Uniform,
    Mixture { cumulative: Vec<f64>, means: Vec<Vec<f64>>, factors: Vec<Matrix> },
}

impl VoterDistribution {
    fn prepare(&self, d: usize, path: &str) -> Result<PreparedDist, ModelError> {
        let components: &[GaussianComponent] = match self {
            VoterDistribution::Uniform => return Ok(PreparedDist::Uniform),
            VoterDistribution::Gaussian(g) => core::slice::from_ref(g),
            VoterDistribution::GaussianMixture { components } => components,
        };
        let mixture = matches!(self, VoterDistribution::GaussianMixture { .. });
        if components.is_empty() {
            return Err(ModelError::new(format!("{path}.components"), "needs at least one component"));
        }
        let mut cumulative = Vec::new();
        let mut means = Vec::new();
        let mut factors = Vec::new();
        let mut acc = 0.0;
        for (i, g) in components.iter().enumerate() {
            let at = if mixture { format!("{path}.components[{i}]") } else { String::from(path) };
            if !(g.weight > 0.0 && g.weight.is_finite()) {
                return Err(ModelError::new(format!("{at}.weight"), "must be positive"));
            }
            if g.mean.len() != d {
                return Err(ModelError::new(format!("{at}.mean"), format!("expected {d} coordinates, got {}", g.mean.len())));
            }
            if g.mean.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::new(format!("{at}.mean"), "must be finite"));
            }
            let factor = match (&g.cov, g.sigma) {
                (Some(cov), None) => {
                    let c = Matrix::from_rows(cov)
                        .filter(|c| c.rows() == d && c.cols() == d && c.is_symmetric(1e-9))
                        .ok_or_else(|| ModelError::new(format!("{at}.cov"), format!("must be a symmetric {d}x{d} matrix")))?;
                    linalg::cholesky_semidefinite(&c, 1e-10, 1e-14)
                        .map_err(|_| ModelError::new(format!("{at}.cov"), "must be positive semidefinite"))?
                }
                (None, Some(s)) if s >= 0.0 && s.is_finite() => {
                    let mut l = Matrix::zeros(d, d);
                    for k in 0..d {
                        l[(k, k)] = s;
                    }
                    l
                }
                (None, Some(_)) => return Err(ModelError::new(format!("{at}.sigma"), "must be non-negative")),
                _ => return Err(ModelError::new(at, "give exactly one of cov or sigma")),
            };
            acc += g.weight;
            cumulative.push(acc);
            means.push(g.mean.clone());
            factors.push(factor);
        }
        for c in cumulative.iter_mut() {
            *c /= acc;
        }
        Ok(PreparedDist::Mixture { cumulative, means, factors })
    }
}

impl PreparedDist {
    fn draw(&self, source: &mut RandomSource, out: &mut [f64]) {
        match self {
            PreparedDist::Uniform => {
                for x in out.iter_mut() {
                    *x = source.uniform();
                }
            }
            PreparedDist::Mixture { cumulative, means, factors } => {
                let k = if cumulative.len() == 1 {
                    0
                } else {
                    let u = source.uniform();
                    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
                };
                let eps: Vec<f64> = (0..out.len()).map(|_| source.standard_normal()).collect();
                linalg::lower_mul(&factors[k], &eps, out);
                for (x, mu) in out.iter_mut().zip(&means[k]) {
                    *x += mu;
                }
            }
        }
    }
}

/// Fixed candidate coordinates or one random placement per profile.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum CandidatePositions {
    Fixed(Vec<Vec<f64>>),
    Random(RandomTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum RandomTag {
    #[cfg_attr(feature = "serde", serde(rename = "random"))]
    Random,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SpatialModel {
    pub d: usize,
    pub voters: VoterDistribution,
    pub candidates: CandidatePositions,
    /// Candidate count when positions are random.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub m: Option<usize>,
    /// Distribution of random candidates; defaults to the voters' one.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub candidate_dist: Option<VoterDistribution>,
    pub link: LinkFunction,
    /// Discretize evaluations to `{0..K}` when set.
    #[cfg_attr(feature = "serde", serde(rename = "K", default))]
    pub levels: Option<u32>,
}

/// Copula choice of a copula model.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum Dependence {
    GaussianCopula {
        correlation: Vec<Vec<f64>>,
        /// Replace an indefinite matrix by its nearest positive definite one.
        #[cfg_attr(feature = "serde", serde(default))]
        repair: bool,
    },
    Checkerboard(CheckerboardCopula),
}

/// Joint law of one voter's evaluations.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "model", rename_all = "snake_case"))]
pub enum GeneratorModel {
    Iid { marginal: Marginal, m: usize },
    Idd { marginals: Vec<Marginal> },
    Copula { dependence: Dependence, marginals: Vec<Marginal> },
    Multinomial {
        #[cfg_attr(feature = "serde", serde(rename = "K"))]
        levels: u32,
        p: Vec<f64>,
    },
    Dirichlet { alpha: Vec<f64> },
    Spatial(SpatialModel),
}

fn marginal_error(path: &str, e: MarginalError) -> ModelError {
    match e {
        MarginalError::InvalidParameter { field, value } => {
            let field = if field == "levels" { "K" } else { field };
            ModelError::new(format!("{path}.{field}"), format!("invalid value {value}"))
        }
        MarginalError::Domain(x) => ModelError::new(path, format!("{x} outside the support")),
    }
}

fn check_marginals(marginals: &[Marginal]) -> Result<Scale, ModelError> {
    if marginals.is_empty() {
        return Err(ModelError::new("marginals", "needs at least one marginal"));
    }
    for (i, mg) in marginals.iter().enumerate() {
        mg.validate().map_err(|e| marginal_error(&format!("marginals[{i}]"), e))?;
    }
    let scale = marginals[0].scale();
    for (i, mg) in marginals.iter().enumerate().skip(1) {
        if mg.scale() != scale {
            return Err(ModelError::new(
                format!("marginals[{i}]"),
                format!("scale {} differs from marginals[0] ({scale})", mg.scale()),
            ));
        }
    }
    Ok(scale)
}

#[derive(Clone, Debug)]
enum Kind {
    Iid(Marginal),
    Idd(Vec<Marginal>),
    Gaussian(GaussianCopula, Vec<Marginal>),
    Checkerboard(CheckerboardCopula, Vec<Marginal>),
    Multinomial(u32, Vec<f64>),
    Dirichlet(Vec<f64>),
    Spatial { voters: PreparedDist, candidates: Matrix, link: LinkFunction, levels: Option<u32> },
}

/// A validated model, ready to draw rows.
#[derive(Clone, Debug)]
pub struct Generator {
    kind: Kind,
    m: usize,
    scale: Scale,
}

/// Voters `[start, start + len)` of a profile, with their latent positions
/// when the model is spatial.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub values: Vec<f64>,
    pub positions: Vec<f64>,
}

/// A spatial profile with the latent points that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialSample {
    pub profile: Profile,
    /// `n × d`.
    pub voters: Matrix,
    /// `m × d`.
    pub candidates: Matrix,
}

impl GeneratorModel {
    /// Checks every invariant of the model.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.prepare(&RandomSource::from_seed(0)).map(|_| ())
    }

    /// Validates the model and precomputes what drawing needs. Random
    /// candidate positions are drawn here, from a child stream of `source`.
    pub fn prepare(&self, source: &RandomSource) -> Result<Generator, ModelError> {
        match self {
            GeneratorModel::Iid { marginal, m } => {
                marginal.validate().map_err(|e| marginal_error("marginal", e))?;
                if *m == 0 {
                    return Err(ModelError::new("m", "needs at least one candidate"));
                }
                Ok(Generator { kind: Kind::Iid(marginal.clone()), m: *m, scale: marginal.scale() })
            }
            GeneratorModel::Idd { marginals } => {
                let scale = check_marginals(marginals)?;
                Ok(Generator { kind: Kind::Idd(marginals.clone()), m: marginals.len(), scale })
            }
            GeneratorModel::Copula { dependence, marginals } => {
                let scale = check_marginals(marginals)?;
                let m = marginals.len();
                let kind = match dependence {
                    Dependence::GaussianCopula { correlation, repair } => {
                        let r = CorrelationMatrix::new(correlation, *repair)
                            .map_err(|e| ModelError::new("dependence.correlation", format!("{e}")))?;
                        if r.dim() != m {
                            return Err(ModelError::new(
                                "dependence.correlation",
                                format!("is {}x{} but there are {m} marginals", r.dim(), r.dim()),
                            ));
                        }
                        let g = GaussianCopula::new(&r)
                            .map_err(|e| ModelError::new("dependence.correlation", format!("{e}")))?;
                        Kind::Gaussian(g, marginals.clone())
                    }
                    Dependence::Checkerboard(cb) => {
                        if cb.dim() != m {
                            return Err(ModelError::new(
                                "dependence.cells",
                                format!("cells have {} coordinates but there are {m} marginals", cb.dim()),
                            ));
                        }
                        Kind::Checkerboard(cb.clone(), marginals.clone())
                    }
                };
                Ok(Generator { kind, m, scale })
            }
            GeneratorModel::Multinomial { levels, p } => {
                if *levels == 0 {
                    return Err(ModelError::new("K", "must be at least 1"));
                }
                check_probabilities(p)?;
                Ok(Generator { kind: Kind::Multinomial(*levels, p.clone()), m: p.len(), scale: Scale::Discrete { levels: *levels } })
            }
            GeneratorModel::Dirichlet { alpha } => {
                if alpha.is_empty() {
                    return Err(ModelError::new("alpha", "needs at least one candidate"));
                }
                for (i, &a) in alpha.iter().enumerate() {
                    if !(a > 0.0 && a.is_finite()) {
                        return Err(ModelError::new(format!("alpha[{i}]"), format!("must be positive, got {a}")));
                    }
                }
                Ok(Generator { kind: Kind::Dirichlet(alpha.clone()), m: alpha.len(), scale: Scale::Continuous })
            }
            GeneratorModel::Spatial(s) => s.prepare(source),
        }
    }
}

fn check_probabilities(p: &[f64]) -> Result<(), ModelError> {
    if p.is_empty() {
        return Err(ModelError::new("p", "needs at least one candidate"));
    }
    for (i, &x) in p.iter().enumerate() {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(ModelError::new(format!("p[{i}]"), format!("must be a probability, got {x}")));
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(ModelError::new("p", format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

impl SpatialModel {
    fn prepare(&self, source: &RandomSource) -> Result<Generator, ModelError> {
        let d = self.d;
        if d == 0 {
            return Err(ModelError::new("d", "must be at least 1"));
        }
        let voters = self.voters.prepare(d, "voters")?;
        self.link.validate().map_err(|e| ModelError::new(format!("link.{}", e.path), e.message))?;
        if let Some(k) = self.levels {
            if k == 0 {
                return Err(ModelError::new("K", "must be at least 1"));
            }
        }
        let candidates = match &self.candidates {
            CandidatePositions::Fixed(rows) => {
                if self.m.is_some_and(|m| m != rows.len()) {
                    return Err(ModelError::new("m", format!("does not match the {} given candidates", rows.len())));
                }
                if rows.is_empty() {
                    return Err(ModelError::new("candidates", "needs at least one candidate"));
                }
                for (i, r) in rows.iter().enumerate() {
                    if r.len() != d {
                        return Err(ModelError::new(
                            format!("candidates[{i}]"),
                            format!("dimension mismatch: expected {d} coordinates, got {}", r.len()),
                        ));
                    }
                    if r.iter().any(|x| !x.is_finite()) {
                        return Err(ModelError::new(format!("candidates[{i}]"), "must be finite"));
                    }
                }
                Matrix::from_rows(rows).expect("rows checked")
            }
            CandidatePositions::Random(_) => {
                let m = self.m.filter(|&m| m > 0).ok_or_else(|| {
                    ModelError::new("m", "random candidates need a positive candidate count")
                })?;
                let dist = match &self.candidate_dist {
                    Some(c) => c.prepare(d, "candidate_dist")?,
                    None => voters.clone(),
                };
                let mut stream = source.derive(CANDIDATE_STREAM);
                let mut y = Matrix::zeros(m, d);
                for c in 0..m {
                    dist.draw(&mut stream, y.row_mut(c));
                }
                y
            }
        };
        let scale = match self.levels {
            Some(k) => Scale::Discrete { levels: k },
            None => Scale::Continuous,
        };
        Ok(Generator {
            m: candidates.rows(),
            kind: Kind::Spatial { voters, candidates, link: self.link, levels: self.levels },
            scale,
        })
    }
}

/// Euclidean distance.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

impl Generator {
    pub fn n_candidates(&self) -> usize {
        self.m
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn is_spatial(&self) -> bool {
        matches!(self.kind, Kind::Spatial { .. })
    }

    /// Candidate positions of a spatial model.
    pub fn candidate_positions(&self) -> Option<&Matrix> {
        match &self.kind {
            Kind::Spatial { candidates, .. } => Some(candidates),
            _ => None,
        }
    }

    pub fn block_count(n: usize) -> usize {
        n.div_ceil(BLOCK_SIZE)
    }

    /// Draws block `b` of an `n`-voter profile.
    pub fn block(&self, source: &RandomSource, b: usize, n: usize) -> Block {
        let start = b * BLOCK_SIZE;
        let len = BLOCK_SIZE.min(n.saturating_sub(start));
        let mut s = source.derive(b as u64);
        let m = self.m;
        let mut values = vec![0.0; len * m];
        let mut positions = Vec::new();
        match &self.kind {
            Kind::Iid(mg) => values.iter_mut().for_each(|x| *x = mg.draw(&mut s)),
            Kind::Idd(mgs) => {
                for row in values.chunks_mut(m) {
                    for (x, mg) in row.iter_mut().zip(mgs) {
                        *x = mg.draw(&mut s);
                    }
                }
            }
            Kind::Gaussian(g, mgs) => {
                for row in values.chunks_mut(m) {
                    g.draw_uniforms(&mut s, row);
                    quantiles(row, mgs);
                }
            }
            Kind::Checkerboard(cb, mgs) => {
                for row in values.chunks_mut(m) {
                    cb.draw_uniforms(&mut s, row);
                    quantiles(row, mgs);
                }
            }
            Kind::Multinomial(k, p) => {
                for row in values.chunks_mut(m) {
                    multinomial_into(*k, p, &mut s, row);
                }
            }
            Kind::Dirichlet(alpha) => {
                for row in values.chunks_mut(m) {
                    dirichlet_into(alpha, &mut s, row);
                }
            }
            Kind::Spatial { voters, candidates, link, levels } => {
                let d = candidates.cols();
                positions = vec![0.0; len * d];
                for (row, x) in values.chunks_mut(m).zip(positions.chunks_mut(d)) {
                    voters.draw(&mut s, x);
                    for (c, e) in row.iter_mut().enumerate() {
                        let v = link_apply(link, distance(x, candidates.row(c)));
                        *e = match levels {
                            Some(k) => discretize(v, *k).expect("link output lies in [0, 1]") as f64,
                            None => v,
                        };
                    }
                }
            }
        }
        Block { values, positions }
    }

    /// Concatenates blocks `0..block_count(n)` in order.
    pub fn assemble(&self, n: usize, blocks: Vec<Block>) -> SpatialSample {
        let mut values = Vec::with_capacity(n * self.m);
        let mut positions = Vec::new();
        for b in blocks {
            values.extend_from_slice(&b.values);
            positions.extend_from_slice(&b.positions);
        }
        let profile = Profile::from_flat(n, self.m, values, self.scale, None).expect("generated rows lie on the scale");
        let (voters, candidates) = match &self.kind {
            Kind::Spatial { candidates, .. } => (Matrix::from_vec(n, candidates.cols(), positions), candidates.clone()),
            _ => (Matrix::zeros(n, 0), Matrix::zeros(self.m, 0)),
        };
        SpatialSample { profile, voters, candidates }
    }

    /// Draws an `n`-voter profile on the current thread.
    pub fn generate(&self, n: usize, source: &RandomSource) -> SpatialSample {
        let blocks = (0..Self::block_count(n)).map(|b| self.block(source, b, n)).collect();
        self.assemble(n, blocks)
    }
}

fn quantiles(row: &mut [f64], marginals: &[Marginal]) {
    for (x, mg) in row.iter_mut().zip(marginals) {
        *x = mg.quantile(*x).expect("copula levels lie in [0, 1]");
    }
}

/// `n` independent voters from `model`.
pub fn generate(model: &GeneratorModel, n: usize, source: &RandomSource) -> Result<Profile, ModelError> {
    if n == 0 {
        return Err(ModelError::new("", "needs at least one voter"));
    }
    Ok(model.prepare(source)?.generate(n, source).profile)
}

/// Spatial profile together with voter and candidate positions.
pub fn spatial_generate(model: &SpatialModel, n: usize, source: &RandomSource) -> Result<SpatialSample, ModelError> {
    if n == 0 {
        return Err(ModelError::new("", "needs at least one voter"));
    }
    Ok(model.prepare(source)?.generate(n, source))
}

fn multinomial_into(levels: u32, p: &[f64], source: &mut RandomSource, out: &mut [f64]) {
    let mut left = levels;
    let mut rest = 1.0;
    let last = p.len() - 1;
    for (c, (&pc, x)) in p.iter().zip(out.iter_mut()).enumerate() {
        let k = if c == last || left == 0 {
            left
        } else if rest <= 0.0 {
            0
        } else {
            binomial_draw(left, (pc / rest).min(1.0), source) as u32
        };
        *x = k as f64;
        left -= k;
        rest -= pc;
    }
}

/// `m` counts summing to `K`, drawn as a chain of conditional binomials.
pub fn multinomial_row(levels: u32, p: &[f64], source: &mut RandomSource) -> Vec<u32> {
    let mut out = vec![0.0; p.len()];
    multinomial_into(levels, p, source, &mut out);
    out.into_iter().map(|x| x as u32).collect()
}

fn dirichlet_into(alpha: &[f64], source: &mut RandomSource, out: &mut [f64]) {
    for (x, &a) in out.iter_mut().zip(alpha) {
        *x = ln_gamma_draw(a, source);
    }
    let top = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in out.iter_mut() {
        *x = exp(*x - top);
        total += *x;
    }
    for x in out.iter_mut() {
        *x /= total;
    }
}

/// Normalized independent Gamma(α_c, 1) draws.
pub fn dirichlet_row(alpha: &[f64], source: &mut RandomSource) -> Vec<f64> {
    let mut out = vec![0.0; alpha.len()];
    dirichlet_into(alpha, source, &mut out);
    out
}
