//! Latent-space representation of an observed profile.
//!
//! Evaluations are turned into voter–candidate dissimilarities and embedded
//! in `ℝ^d` by weighted SMACOF in unfolding form: only voter–candidate pairs
//! carry weight, voter–voter and candidate–candidate pairs have weight 0.
//! Voter positions can then be summarized by a Gaussian (mixture) and used
//! to generate new voters.

use crate::generators::{
    spatial_generate, CandidatePositions, GaussianComponent, LinkFunction, ModelError, SpatialModel, SpatialSample,
    VoterDistribution,
};
use crate::linalg::{self, Matrix};
use crate::profile::Profile;
use crate::rng::RandomSource;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, log, sqrt};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("invalid embedding problem: {0}")]
    InvalidProblem(String),
    #[error("the weights split voters and candidates into disconnected groups")]
    Disconnected,
    #[error("initial configuration is degenerate (coincident points) after {0} jittered restarts")]
    DegenerateInit(usize),
    #[error("stress became non-finite")]
    NonFinite,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Voter–candidate dissimilarities and weights, both `n × m` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingProblem {
    pub n: usize,
    pub m: usize,
    pub delta: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EmbeddingProblem {
    /// Unit weights.
    pub fn new(n: usize, m: usize, delta: Vec<f64>) -> Result<Self, EmbeddingError> {
        Self::with_weights(n, m, delta, vec![1.0; n * m])
    }

    pub fn with_weights(n: usize, m: usize, delta: Vec<f64>, weights: Vec<f64>) -> Result<Self, EmbeddingError> {
        let p = EmbeddingProblem { n, m, delta, weights };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |s: &str| Err(EmbeddingError::InvalidProblem(String::from(s)));
        if self.n == 0 || self.m == 0 {
            return bad("needs at least one voter and one candidate");
        }
        if self.delta.len() != self.n * self.m || self.weights.len() != self.n * self.m {
            return bad("delta and weights must both be n x m");
        }
        if self.delta.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return bad("dissimilarities must be finite and non-negative");
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("weights must be finite and non-negative");
        }
        for v in 0..self.n {
            if !self.weights[v * self.m..(v + 1) * self.m].iter().any(|&w| w > 0.0) {
                return Err(EmbeddingError::InvalidProblem(format!("voter {} has no positive weight", v + 1)));
            }
        }
        for c in 0..self.m {
            if !(0..self.n).any(|v| self.weights[v * self.m + c] > 0.0) {
                return Err(EmbeddingError::InvalidProblem(format!("candidate {} has no positive weight", c + 1)));
            }
        }
        Ok(())
    }

    #[inline]
    fn at(&self, v: usize, c: usize) -> (f64, f64) {
        let k = v * self.m + c;
        (self.delta[k], self.weights[k])
    }

    /// `Σ w δ²`, the normalizer of the normalized stress.
    pub fn scale(&self) -> f64 {
        self.delta.iter().zip(&self.weights).map(|(d, w)| w * d * d).sum()
    }
}

/// Maps evaluations to dissimilarities. Discrete grades are first moved to
/// `(g + 0.5)/(K + 1)`. Without a link, `δ = 1 − e`; with one, `δ` inverts
/// it (a linear link's `e = 0` is censored to `δ = 1/ℓ`).
pub fn evals_to_dissimilarities(profile: &Profile, inverse_link: Option<&LinkFunction>) -> EmbeddingProblem {
    let (n, m) = (profile.n_voters(), profile.n_candidates());
    let levels = profile.scale().levels();
    let delta = profile
        .values()
        .iter()
        .map(|&x| {
            let e = match levels {
                Some(k) => (x + 0.5) / (k as f64 + 1.0),
                None => x,
            };
            dissimilarity(e, inverse_link)
        })
        .collect();
    EmbeddingProblem { n, m, delta, weights: vec![1.0; n * m] }
}

/// Dissimilarity of one evaluation in `[0, 1]`.
pub fn dissimilarity(e: f64, inverse_link: Option<&LinkFunction>) -> f64 {
    if e >= 1.0 {
        return 0.0;
    }
    match inverse_link {
        None => 1.0 - e,
        Some(LinkFunction::LinearTruncated { ell }) => (1.0 - e.max(0.0)) / ell,
        Some(LinkFunction::Sigmoid { lambda, beta_link }) => {
            let e = e.clamp(1e-6, 1.0 - 1e-6);
            ((1.0 + log((1.0 - e) / e) / lambda) / beta_link).max(0.0)
        }
    }
}

/// Raw stress `Σ w (d − δ)²`.
pub fn stress(voters: &Matrix, candidates: &Matrix, problem: &EmbeddingProblem) -> f64 {
    let mut s = 0.0;
    for v in 0..problem.n {
        for c in 0..problem.m {
            let (delta, w) = problem.at(v, c);
            if w > 0.0 {
                let r = dist(voters.row(v), candidates.row(c)) - delta;
                s += w * r * r;
            }
        }
    }
    s
}

/// Stress-1: `sqrt(Σ w (d − δ)² / Σ w δ²)`.
pub fn normalized_stress(raw: f64, problem: &EmbeddingProblem) -> f64 {
    let scale = problem.scale();
    if scale > 0.0 {
        sqrt(raw / scale)
    } else {
        0.0
    }
}

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    /// Uniform on `[0, 1]^d`.
    Random,
    /// Candidates by classical scaling of the distance bounds
    /// `max_v |δ_vc − δ_vc'|`, then each voter at its best position against
    /// the fixed candidates.
    Classical,
    Positions { voters: Matrix, candidates: Matrix },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmacofOptions {
    pub max_iter: usize,
    /// Stop when the relative stress decrease falls below `eps`.
    pub eps: f64,
    /// Independent random starts; the lowest final stress wins.
    pub starts: usize,
}

impl Default for SmacofOptions {
    fn default() -> Self {
        SmacofOptions { max_iter: 500, eps: 1e-6, starts: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSolution {
    pub voters: Matrix,
    pub candidates: Matrix,
    pub stress: f64,
    pub normalized_stress: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Stress before the first and after every iteration.
    pub trace: Vec<f64>,
    /// Jittered restarts used to escape a degenerate start.
    pub restarts: usize,
}

/// Guttman-transform solver for a fixed weight pattern.
struct Solver<'a> {
    p: &'a EmbeddingProblem,
    row_sums: Vec<f64>,
    /// Cholesky factor of `S + 11ᵀ`, `S = D_c − Wᵀ D_r⁻¹ W`.
    schur: Matrix,
}

const MAX_RESTARTS: usize = 5;

impl<'a> Solver<'a> {
    fn new(p: &'a EmbeddingProblem) -> Result<Self, EmbeddingError> {
        p.validate()?;
        let (n, m) = (p.n, p.m);
        let row_sums: Vec<f64> = (0..n).map(|v| p.weights[v * m..(v + 1) * m].iter().sum()).collect();
        let mut s = Matrix::zeros(m, m);
        for v in 0..n {
            let w = &p.weights[v * m..(v + 1) * m];
            for i in 0..m {
                if w[i] == 0.0 {
                    continue;
                }
                s[(i, i)] += w[i];
                let a = w[i] / row_sums[v];
                for j in 0..m {
                    s[(i, j)] -= a * w[j];
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                s[(i, j)] += 1.0;
            }
        }
        let scale = (0..m).map(|i| s[(i, i)]).fold(0.0, f64::max);
        let schur = linalg::cholesky(&s, 1e-12 * scale).map_err(|_| EmbeddingError::Disconnected)?;
        Ok(Solver { p, row_sums, schur })
    }

    /// One Guttman transform `X ← V⁺ B(X) X`, centered.
    fn step(&self, xr: &Matrix, xc: &Matrix) -> (Matrix, Matrix) {
        let (n, m, d) = (self.p.n, self.p.m, xr.cols());
        let mut yr = Matrix::zeros(n, d);
        let mut yc = Matrix::zeros(m, d);
        for v in 0..n {
            for c in 0..m {
                let (delta, w) = self.p.at(v, c);
                if w == 0.0 {
                    continue;
                }
                let dvc = dist(xr.row(v), xc.row(c));
                if dvc <= 1e-300 {
                    continue;
                }
                let b = w * delta / dvc;
                for k in 0..d {
                    let diff = xr[(v, k)] - xc[(c, k)];
                    yr[(v, k)] += b * diff;
                    yc[(c, k)] -= b * diff;
                }
            }
        }
        // Solve V X = Y by eliminating the voter block.
        let mut new_c = Matrix::zeros(m, d);
        let mut rhs = vec![0.0; m];
        for k in 0..d {
            for c in 0..m {
                rhs[c] = yc[(c, k)];
            }
            for v in 0..n {
                let a = yr[(v, k)] / self.row_sums[v];
                for c in 0..m {
                    rhs[c] += self.p.weights[v * m + c] * a;
                }
            }
            linalg::cholesky_solve(&self.schur, &mut rhs);
            for c in 0..m {
                new_c[(c, k)] = rhs[c];
            }
        }
        let mut new_r = Matrix::zeros(n, d);
        for v in 0..n {
            let w = &self.p.weights[v * m..(v + 1) * m];
            for k in 0..d {
                let mut s = yr[(v, k)];
                for c in 0..m {
                    s += w[c] * new_c[(c, k)];
                }
                new_r[(v, k)] = s / self.row_sums[v];
            }
        }
        center(&mut new_r, &mut new_c);
        (new_r, new_c)
    }
}

fn center(xr: &mut Matrix, xc: &mut Matrix) {
    let d = xr.cols();
    let total = (xr.rows() + xc.rows()) as f64;
    for k in 0..d {
        let mean = ((0..xr.rows()).map(|i| xr[(i, k)]).sum::<f64>() + (0..xc.rows()).map(|i| xc[(i, k)]).sum::<f64>()) / total;
        for i in 0..xr.rows() {
            xr[(i, k)] -= mean;
        }
        for i in 0..xc.rows() {
            xc[(i, k)] -= mean;
        }
    }
}

fn degenerate(xr: &Matrix, xc: &Matrix, p: &EmbeddingProblem) -> bool {
    (0..p.n).any(|v| (0..p.m).any(|c| p.at(v, c).1 > 0.0 && dist(xr.row(v), xc.row(c)) <= 1e-12))
}

fn random_positions(rows: usize, d: usize, source: &mut RandomSource) -> Matrix {
    Matrix::from_vec(rows, d, (0..rows * d).map(|_| source.uniform()).collect())
}

fn jitter(x: &mut Matrix, scale: f64, source: &mut RandomSource) {
    for i in 0..x.rows() {
        for v in x.row_mut(i) {
            *v += scale * (source.uniform() - 0.5);
        }
    }
}

fn run(
    solver: &Solver,
    mut xr: Matrix,
    mut xc: Matrix,
    opts: &SmacofOptions,
    source: &mut RandomSource,
) -> Result<EmbeddingSolution, EmbeddingError> {
    let p = solver.p;
    let mut restarts = 0;
    while degenerate(&xr, &xc, p) {
        if restarts == MAX_RESTARTS {
            return Err(EmbeddingError::DegenerateInit(restarts));
        }
        restarts += 1;
        let spread = xr.as_slice().iter().chain(xc.as_slice()).map(|x| x.abs()).fold(0.0, f64::max);
        let scale = 1e-3 * if spread > 0.0 { spread } else { 1.0 };
        jitter(&mut xr, scale, source);
        jitter(&mut xc, scale, source);
    }
    let floor = 1e-24 * p.scale();
    let mut s = stress(&xr, &xc, p);
    if !s.is_finite() {
        return Err(EmbeddingError::NonFinite);
    }
    let mut trace = vec![s];
    let mut converged = s <= floor;
    let mut iterations = 0;
    while !converged && iterations < opts.max_iter {
        let (nr, nc) = solver.step(&xr, &xc);
        let ns = stress(&nr, &nc, p);
        if !ns.is_finite() {
            return Err(EmbeddingError::NonFinite);
        }
        iterations += 1;
        trace.push(ns);
        let decrease = s - ns;
        xr = nr;
        xc = nc;
        converged = decrease < opts.eps * s || ns <= floor;
        s = ns;
    }
    Ok(EmbeddingSolution {
        normalized_stress: normalized_stress(s, p),
        voters: xr,
        candidates: xc,
        stress: s,
        iterations,
        converged,
        trace,
        restarts,
    })
}

/// Weighted SMACOF for the voter–candidate unfolding problem.
///
/// Random starts draw from child streams `0..starts` of `source`.
pub fn smacof(
    problem: &EmbeddingProblem,
    d: usize,
    init: &Init,
    opts: &SmacofOptions,
    source: &RandomSource,
) -> Result<EmbeddingSolution, EmbeddingError> {
    if d == 0 {
        return Err(EmbeddingError::InvalidProblem(String::from("d must be at least 1")));
    }
    if opts.max_iter == 0 || !(opts.eps > 0.0) {
        return Err(EmbeddingError::InvalidProblem(String::from("max_iter must be >= 1 and eps > 0")));
    }
    let solver = Solver::new(problem)?;
    match init {
        Init::Positions { voters, candidates } => {
            check_shape(voters, problem.n, d)?;
            check_shape(candidates, problem.m, d)?;
            let mut s = source.derive(0);
            run(&solver, voters.clone(), candidates.clone(), opts, &mut s)
        }
        Init::Classical => {
            let mut s = source.derive(0);
            let (xr, xc) = classical_start(problem, d, &mut s);
            run(&solver, xr, xc, opts, &mut s)
        }
        Init::Random => {
            let mut best: Option<EmbeddingSolution> = None;
            let mut last_err = None;
            for k in 0..opts.starts.max(1) {
                let mut s = source.derive(k as u64);
                let xr = random_positions(problem.n, d, &mut s);
                let xc = random_positions(problem.m, d, &mut s);
                match run(&solver, xr, xc, opts, &mut s) {
                    Ok(sol) => {
                        if best.as_ref().is_none_or(|b| sol.stress < b.stress) {
                            best = Some(sol);
                        }
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            best.ok_or_else(|| last_err.unwrap())
        }
    }
}

/// Candidate positions from classical scaling of the triangle-inequality
/// bounds on candidate distances; flat directions get a small jitter.
fn classical_candidates(p: &EmbeddingProblem, d: usize, source: &mut RandomSource) -> Matrix {
    let m = p.m;
    let mut d2 = Matrix::zeros(m, m);
    for a in 0..m {
        for b in (a + 1)..m {
            let mut bound: f64 = 0.0;
            for v in 0..p.n {
                let (da, wa) = p.at(v, a);
                let (db, wb) = p.at(v, b);
                if wa > 0.0 && wb > 0.0 {
                    bound = bound.max((da - db).abs());
                }
            }
            d2[(a, b)] = bound * bound;
            d2[(b, a)] = bound * bound;
        }
    }
    // double centering
    let row: Vec<f64> = (0..m).map(|i| (0..m).map(|j| d2[(i, j)]).sum::<f64>() / m as f64).collect();
    let all = row.iter().sum::<f64>() / m as f64;
    let mut b = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] = -0.5 * (d2[(i, j)] - row[i] - row[j] + all);
        }
    }
    let (values, vectors) = linalg::symmetric_eigen(&b);
    let scale = sqrt(values.last().copied().unwrap_or(0.0).max(0.0)).max(1e-6);
    let mut x = Matrix::zeros(m, d);
    for k in 0..d {
        let idx = m.checked_sub(k + 1);
        let lambda = idx.map_or(0.0, |i| values[i].max(0.0));
        for i in 0..m {
            x[(i, k)] = match idx {
                Some(col) if lambda > 1e-12 * scale * scale => sqrt(lambda) * vectors[(i, col)],
                _ => 1e-3 * scale * (source.uniform() - 0.5),
            };
        }
    }
    x
}

/// Best position of voter `v` against fixed candidates: single-point
/// majorization from the candidate centroid and from a point at distance
/// `δ_vc` beyond each candidate.
fn place_voter(p: &EmbeddingProblem, v: usize, xc: &Matrix, out: &mut [f64]) {
    let (m, d) = (p.m, xc.cols());
    let centroid: Vec<f64> = (0..d).map(|k| (0..m).map(|c| xc[(c, k)]).sum::<f64>() / m as f64).collect();
    let loss = |x: &[f64]| -> f64 {
        (0..m)
            .map(|c| {
                let (delta, w) = p.at(v, c);
                let r = dist(x, xc.row(c)) - delta;
                w * r * r
            })
            .sum()
    };
    let mut starts = vec![centroid.clone()];
    for c in 0..m {
        let dir: Vec<f64> = (0..d).map(|k| xc[(c, k)] - centroid[k]).collect();
        let len = sqrt(dir.iter().map(|x| x * x).sum());
        let delta = p.at(v, c).0.max(1e-6);
        starts.push(
            (0..d)
                .map(|k| xc[(c, k)] + delta * if len > 0.0 { dir[k] / len } else if k == 0 { 1.0 } else { 0.0 })
                .collect(),
        );
    }
    let total: f64 = (0..m).map(|c| p.at(v, c).1).sum();
    let mut best = f64::INFINITY;
    for mut x in starts {
        for _ in 0..100 {
            let mut next = vec![0.0; d];
            for c in 0..m {
                let (delta, w) = p.at(v, c);
                let dc = dist(&x, xc.row(c));
                let ratio = if dc > 1e-300 { delta / dc } else { 0.0 };
                for k in 0..d {
                    next[k] += w * (xc[(c, k)] + ratio * (x[k] - xc[(c, k)]));
                }
            }
            let mut change: f64 = 0.0;
            for k in 0..d {
                next[k] /= total;
                change = change.max((next[k] - x[k]).abs());
            }
            x = next;
            if change < 1e-10 {
                break;
            }
        }
        let l = loss(&x);
        if l < best {
            best = l;
            out.copy_from_slice(&x);
        }
    }
}

fn classical_start(p: &EmbeddingProblem, d: usize, source: &mut RandomSource) -> (Matrix, Matrix) {
    let xc = classical_candidates(p, d, source);
    let mut xr = Matrix::zeros(p.n, d);
    for v in 0..p.n {
        place_voter(p, v, &xc, xr.row_mut(v));
    }
    (xr, xc)
}

fn check_shape(x: &Matrix, rows: usize, d: usize) -> Result<(), EmbeddingError> {
    if x.rows() != rows {
        return Err(EmbeddingError::DimensionMismatch { expected: rows, got: x.rows() });
    }
    if x.cols() != d {
        return Err(EmbeddingError::DimensionMismatch { expected: d, got: x.cols() });
    }
    Ok(())
}

fn pad(x: &Matrix, d: usize, scale: f64, source: &mut RandomSource) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), d);
    for i in 0..x.rows() {
        for k in 0..d {
            out[(i, k)] = if k < x.cols() { x[(i, k)] } else { scale * (source.uniform() - 0.5) };
        }
    }
    out
}

/// Embeds in dimensions `1..=d`. Each dimension is started from random
/// positions, from [`Init::Classical`] and from the previous solution with a
/// small extra coordinate; the lowest final stress is kept.
/// A solution never has more stress than the one below it: when the new
/// runs end worse, the previous configuration padded with a zero coordinate
/// is kept.
pub fn smacof_nested(
    problem: &EmbeddingProblem,
    d: usize,
    opts: &SmacofOptions,
    source: &RandomSource,
) -> Result<Vec<EmbeddingSolution>, EmbeddingError> {
    let mut out: Vec<EmbeddingSolution> = Vec::new();
    for k in 1..=d {
        let child = source.derive(k as u64);
        let mut best = smacof(problem, k, &Init::Random, opts, &child)?;
        let classical = smacof(problem, k, &Init::Classical, opts, &child.derive(u64::MAX - 1))?;
        if classical.stress < best.stress {
            best = classical;
        }
        if let Some(prev) = out.last() {
            let mut js = child.derive(u64::MAX);
            let spread = prev.voters.as_slice().iter().map(|x| x.abs()).fold(1e-12, f64::max);
            let init = Init::Positions {
                voters: pad(&prev.voters, k, 1e-2 * spread, &mut js),
                candidates: pad(&prev.candidates, k, 1e-2 * spread, &mut js),
            };
            let nested = smacof(problem, k, &init, opts, &js)?;
            if nested.stress < best.stress {
                best = nested;
            }
            if best.stress > prev.stress {
                let mut zero = RandomSource::from_seed(0);
                let voters = pad(&prev.voters, k, 0.0, &mut zero);
                let candidates = pad(&prev.candidates, k, 0.0, &mut zero);
                best = EmbeddingSolution { voters, candidates, ..prev.clone() };
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// Family used to summarize embedded voters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefitFamily {
    Gaussian,
    GaussianMixture(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refit {
    pub distribution: VoterDistribution,
    /// Some covariance was singular and got `1e-8·I` added.
    pub regularized: bool,
    /// Log-likelihood of the positions under the fit.
    pub log_likelihood: f64,
}

fn covariance(points: &Matrix, weights: Option<&[f64]>, mean: &[f64]) -> Matrix {
    let d = points.cols();
    let mut cov = Matrix::zeros(d, d);
    let mut total = 0.0;
    for i in 0..points.rows() {
        let w = weights.map_or(1.0, |w| w[i]);
        total += w;
        let row = points.row(i);
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += w * (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    // unbiased for unit weights, plain weighted average otherwise
    let denom = if weights.is_none() { total - 1.0 } else { total };
    for a in 0..d {
        for b in 0..d {
            cov[(a, b)] /= denom;
        }
    }
    cov
}

/// Cholesky factor of `cov`, adding `1e-8·I` when it is not positive
/// definite.
fn regularize(cov: &mut Matrix) -> (Matrix, bool) {
    let scale = (0..cov.rows()).map(|i| cov[(i, i)]).fold(0.0, f64::max);
    if let Ok(l) = linalg::cholesky(cov, 1e-12 * scale.max(1e-300)) {
        return (l, false);
    }
    for i in 0..cov.rows() {
        cov[(i, i)] += 1e-8;
    }
    let l = linalg::cholesky_semidefinite(cov, f64::INFINITY, 0.0).expect("regularized covariance");
    (l, true)
}

fn ln_pdf(x: &[f64], mean: &[f64], chol: &Matrix) -> f64 {
    let d = x.len();
    let mut z: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    for i in 0..d {
        let mut s = z[i];
        for k in 0..i {
            s -= chol[(i, k)] * z[k];
        }
        z[i] = s / chol[(i, i)];
    }
    let quad: f64 = z.iter().map(|v| v * v).sum();
    let ln_det: f64 = (0..d).map(|i| log(chol[(i, i)])).sum();
    -0.5 * quad - ln_det - 0.5 * d as f64 * log(2.0 * core::f64::consts::PI)
}

fn component(weight: f64, mean: Vec<f64>, cov: &Matrix) -> GaussianComponent {
    GaussianComponent { weight, mean, cov: Some(cov.to_rows()), sigma: None }
}

/// Fits a Gaussian or a `k`-component Gaussian mixture to voter positions.
/// The mixture starts from k-means++ seeded by `source` and runs 100 EM
/// iterations.
pub fn refit_voter_distribution(
    positions: &Matrix,
    family: RefitFamily,
    source: &RandomSource,
) -> Result<Refit, EmbeddingError> {
    let (n, d) = (positions.rows(), positions.cols());
    if n < d + 2 {
        return Err(EmbeddingError::TooFewPoints { needed: d + 2, got: n });
    }
    match family {
        RefitFamily::Gaussian => {
            let mean: Vec<f64> = (0..d).map(|k| (0..n).map(|i| positions[(i, k)]).sum::<f64>() / n as f64).collect();
            let mut cov = covariance(positions, None, &mean);
            let (l, regularized) = regularize(&mut cov);
            let log_likelihood = (0..n).map(|i| ln_pdf(positions.row(i), &mean, &l)).sum();
            Ok(Refit { distribution: VoterDistribution::Gaussian(component(1.0, mean, &cov)), regularized, log_likelihood })
        }
        RefitFamily::GaussianMixture(k) => {
            if k == 0 {
                return Err(EmbeddingError::InvalidProblem(String::from("mixture needs k >= 1")));
            }
            if n < k * (d + 2) {
                return Err(EmbeddingError::TooFewPoints { needed: k * (d + 2), got: n });
            }
            em(positions, k, source)
        }
    }
}

fn kmeans(points: &Matrix, k: usize, source: &mut RandomSource) -> Vec<usize> {
    let (n, d) = (points.rows(), points.cols());
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = vec![points.row(source.below(n as u64) as usize).to_vec()];
    let mut best = vec![f64::INFINITY; n];
    while centers.len() < k {
        let last = centers.last().unwrap().clone();
        for i in 0..n {
            best[i] = best[i].min(sq(points.row(i), &last));
        }
        let total: f64 = best.iter().sum();
        let pick = if total > 0.0 {
            let t = source.uniform() * total;
            let mut acc = 0.0;
            (0..n).find(|&i| {
                acc += best[i];
                acc > t
            })
            .unwrap_or(n - 1)
        } else {
            source.below(n as u64) as usize
        };
        centers.push(points.row(pick).to_vec());
    }
    let mut labels = vec![0usize; n];
    for _ in 0..50 {
        let mut changed = false;
        for i in 0..n {
            let c = (0..k)
                .min_by(|&a, &b| sq(points.row(i), &centers[a]).total_cmp(&sq(points.row(i), &centers[b])))
                .unwrap();
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..d {
                sums[labels[i]][j] += points[(i, j)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

fn em(points: &Matrix, k: usize, source: &RandomSource) -> Result<Refit, EmbeddingError> {
    let (n, d) = (points.rows(), points.cols());
    let mut s = source.derive(0);
    let labels = kmeans(points, k, &mut s);
    let mut resp = Matrix::zeros(n, k);
    for i in 0..n {
        resp[(i, labels[i])] = 1.0;
    }
    let mut regularized = false;
    let mut params: Vec<(f64, Vec<f64>, Matrix, Matrix)> = Vec::new();
    let mut log_likelihood = f64::NEG_INFINITY;
    for _ in 0..100 {
        // M step
        params.clear();
        for c in 0..k {
            let w: Vec<f64> = (0..n).map(|i| resp[(i, c)]).collect();
            let total: f64 = w.iter().sum::<f64>().max(1e-300);
            let mean: Vec<f64> = (0..d).map(|j| (0..n).map(|i| w[i] * points[(i, j)]).sum::<f64>() / total).collect();
            let mut cov = covariance(points, Some(&w), &mean);
            let (l, reg) = regularize(&mut cov);
            regularized |= reg;
            params.push((total / n as f64, mean, cov, l));
        }
        // E step
        log_likelihood = 0.0;
        let mut lp = vec![0.0; k];
        for i in 0..n {
            for (c, (w, mean, _, l)) in params.iter().enumerate() {
                lp[c] = log(*w) + ln_pdf(points.row(i), mean, l);
            }
            let top = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = lp.iter().map(|x| exp(x - top)).sum();
            log_likelihood += top + log(total);
            for c in 0..k {
                resp[(i, c)] = exp(lp[c] - top) / total;
            }
        }
    }
    let components = params.iter().map(|(w, mean, cov, _)| component(*w, mean.clone(), cov)).collect();
    Ok(Refit { distribution: VoterDistribution::GaussianMixture { components }, regularized, log_likelihood })
}

/// Draws `n` new voters from `voters` and evaluates the fixed candidates.
/// Same as spatial generation with fixed candidate positions.
pub fn generate_from_embedding(
    candidates: &Matrix,
    voters: &VoterDistribution,
    link: &LinkFunction,
    n: usize,
    source: &RandomSource,
    levels: Option<u32>,
) -> Result<SpatialSample, ModelError> {
    let model = SpatialModel {
        d: candidates.cols(),
        voters: voters.clone(),
        candidates: CandidatePositions::Fixed(candidates.to_rows()),
        m: None,
        candidate_dist: None,
        link: *link,
        levels,
    };
    spatial_generate(&model, n, source)
}
