//! Dependence between candidates: Gaussian and checkerboard copulas.
//!
//! A Gaussian copula couples marginals through a latent `N(0, R)` vector:
//! draw `z = L·ε` with `L·Lᵀ = R`, map `u_c = Φ(z_c)`, then apply each
//! marginal's quantile. The checkerboard copula splits `[0, 1]^m` into
//! `B^m` equal boxes and spreads the observed pseudo-observation frequency of
//! each box uniformly inside it.

use crate::linalg::{self, Matrix};
use crate::profile::Profile;
use crate::rng::RandomSource;
use crate::special::norm_cdf;
use crate::stats::mid_ranks;
use crate::univariate::Marginal;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, floor};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

const SYMMETRY_TOL: f64 = 1e-9;
const MIN_EIGEN_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-12;
const REPAIR_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CopulaError {
    #[error("correlation matrix is not positive definite (smallest eigenvalue {0})")]
    NotPositiveDefinite(f64),
    #[error("correlation matrix must be square and non-empty")]
    NotSquare,
    #[error("correlation matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("correlation matrix diagonal entry {0} is not 1")]
    BadDiagonal(usize),
    #[error("correlation entry ({0}, {1}) = {2} is outside [-1, 1]")]
    OutOfRange(usize, usize, f64),
    #[error("expected {expected} marginals, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("marginals must all share one scale")]
    MixedScales,
    #[error("at least two voters are needed")]
    TooFewObservations,
    #[error("checkerboard needs B >= 1")]
    ZeroCells,
    #[error("invalid checkerboard cell: {0}")]
    InvalidCell(&'static str),
    #[error("checkerboard masses sum to {0}, not 1")]
    MassSum(f64),
}

/// Symmetric, unit-diagonal, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>"))]
pub struct CorrelationMatrix {
    r: Matrix,
}

impl TryFrom<Vec<Vec<f64>>> for CorrelationMatrix {
    type Error = CopulaError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, CopulaError> {
        CorrelationMatrix::new(&rows, false)
    }
}

impl From<CorrelationMatrix> for Vec<Vec<f64>> {
    fn from(c: CorrelationMatrix) -> Self {
        c.r.to_rows()
    }
}

impl CorrelationMatrix {
    /// Validates `rows` as a correlation matrix. With `repair`, a matrix
    /// whose smallest eigenvalue is negative is replaced by its nearest-PD
    /// repair instead of being rejected.
    pub fn new(rows: &[Vec<f64>], repair: bool) -> Result<Self, CopulaError> {
        let r = Matrix::from_rows(rows).ok_or(CopulaError::NotSquare)?;
        if !r.is_square() || r.rows() == 0 {
            return Err(CopulaError::NotSquare);
        }
        Self::from_matrix(r, repair)
    }

    pub fn from_matrix(mut r: Matrix, repair: bool) -> Result<Self, CopulaError> {
        if !r.is_square() || r.rows() == 0 {
            return Err(CopulaError::NotSquare);
        }
        let m = r.rows();
        for i in 0..m {
            if fabs(r[(i, i)] - 1.0) > SYMMETRY_TOL {
                return Err(CopulaError::BadDiagonal(i));
            }
            r[(i, i)] = 1.0;
            for j in 0..m {
                let v = r[(i, j)];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(CopulaError::OutOfRange(i, j, v));
                }
                if fabs(v - r[(j, i)]) > SYMMETRY_TOL {
                    return Err(CopulaError::NotSymmetric(i, j));
                }
            }
        }
        // exact symmetry from the upper triangle
        for i in 0..m {
            for j in 0..i {
                r[(i, j)] = r[(j, i)];
            }
        }
        let (eig, _) = linalg::symmetric_eigen(&r);
        let min = eig[0];
        if min > -MIN_EIGEN_TOL {
            return Ok(CorrelationMatrix { r });
        }
        if repair {
            Ok(CorrelationMatrix { r: nearest_pd(&r) })
        } else {
            Err(CopulaError::NotPositiveDefinite(min))
        }
    }

    pub fn identity(m: usize) -> Self {
        CorrelationMatrix { r: Matrix::identity(m) }
    }

    pub fn dim(&self) -> usize {
        self.r.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.r
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.r.to_rows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::symmetric_eigen(&self.r).0[0]
    }
}

/// Clips eigenvalues at `1e-8`, rebuilds the matrix and rescales it back to
/// a unit diagonal.
pub fn nearest_pd(r: &Matrix) -> Matrix {
    let m = r.rows();
    let (vals, vecs) = linalg::symmetric_eigen(r);
    let mut out = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = (0..m).map(|k| vecs[(i, k)] * vals[k].max(REPAIR_FLOOR) * vecs[(j, k)]).sum();
        }
    }
    let d: Vec<f64> = (0..m).map(|i| libm::sqrt(out[(i, i)])).collect();
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = if i == j { 1.0 } else { (out[(i, j)] / (d[i] * d[j])).clamp(-1.0, 1.0) };
        }
    }
    out
}

/// Strict Cholesky factor of a correlation-like matrix: a pivot `≤ 1e-12`
/// is reported with the matrix's smallest eigenvalue.
pub fn cholesky(r: &Matrix) -> Result<Matrix, CopulaError> {
    if !r.is_square() {
        return Err(CopulaError::NotSquare);
    }
    linalg::cholesky(r, PIVOT_TOL)
        .map_err(|_| CopulaError::NotPositiveDefinite(linalg::symmetric_eigen(r).0[0]))
}

/// Rank transform of each column to `rank/(n + 1)` with mid-ranks for ties.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoObservations {
    /// `n × m`, values in `(0, 1)`.
    pub values: Matrix,
    /// Constant columns (all entries equal to 1/2).
    pub degenerate: Vec<usize>,
}

pub fn pseudo_observations(profile: &Profile) -> Result<PseudoObservations, CopulaError> {
    pseudo_observations_of_columns(&profile.columns())
}

pub fn pseudo_observations_of_columns(columns: &[Vec<f64>]) -> Result<PseudoObservations, CopulaError> {
    let m = columns.len();
    let n = columns.first().map_or(0, |c| c.len());
    if n < 2 {
        return Err(CopulaError::TooFewObservations);
    }
    let mut values = Matrix::zeros(n, m);
    let mut degenerate = Vec::new();
    for (c, col) in columns.iter().enumerate() {
        let ranks = mid_ranks(col);
        if col.iter().all(|&x| x == col[0]) {
            degenerate.push(c);
        }
        for (v, r) in ranks.into_iter().enumerate() {
            values[(v, c)] = r / (n as f64 + 1.0);
        }
    }
    Ok(PseudoObservations { values, degenerate })
}

fn check_marginals(marginals: &[Marginal], m: usize) -> Result<(), CopulaError> {
    if marginals.len() != m {
        return Err(CopulaError::Dimension { expected: m, got: marginals.len() });
    }
    let scale = marginals[0].scale();
    if marginals.iter().any(|x| x.scale() != scale) {
        return Err(CopulaError::MixedScales);
    }
    Ok(())
}

/// Gaussian copula with a precomputed (semidefinite-tolerant) factor.
#[derive(Clone, Debug)]
pub struct GaussianCopula {
    factor: Matrix,
}

impl GaussianCopula {
    pub fn new(r: &CorrelationMatrix) -> Result<Self, CopulaError> {
        let factor = linalg::cholesky_semidefinite(r.matrix(), MIN_EIGEN_TOL, PIVOT_TOL)
            .map_err(|_| CopulaError::NotPositiveDefinite(r.min_eigenvalue()))?;
        Ok(GaussianCopula { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.rows()
    }

    /// Fills `u` with one draw of the copula (uniform margins).
    pub fn draw_uniforms(&self, source: &mut RandomSource, u: &mut [f64]) {
        let m = self.dim();
        let eps: Vec<f64> = (0..m).map(|_| source.standard_normal()).collect();
        linalg::lower_mul(&self.factor, &eps, u);
        for x in u.iter_mut() {
            *x = norm_cdf(*x);
        }
    }

    /// One evaluation row: `quantile(marginal_c, Φ(z_c))`.
    pub fn draw(&self, marginals: &[Marginal], source: &mut RandomSource) -> Result<Vec<f64>, CopulaError> {
        check_marginals(marginals, self.dim())?;
        let mut u = vec![0.0; self.dim()];
        self.draw_uniforms(source, &mut u);
        Ok(u.iter().zip(marginals).map(|(&u, mg)| mg.quantile(u).unwrap_or(f64::NAN)).collect())
    }
}

/// One row from the Gaussian copula with correlation `r` and the given
/// marginals.
pub fn gaussian_copula_draw(
    r: &CorrelationMatrix,
    marginals: &[Marginal],
    source: &mut RandomSource,
) -> Result<Vec<f64>, CopulaError> {
    GaussianCopula::new(r)?.draw(marginals, source)
}

/// One occupied box of a checkerboard copula.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CheckerboardCell {
    pub index: Vec<u32>,
    pub mass: f64,
}

#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
struct CheckerboardRepr {
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    cells_per_axis: u32,
    cells: Vec<CheckerboardCell>,
}

/// Piecewise-constant copula on a `B`-per-axis grid, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "CheckerboardRepr", into = "CheckerboardRepr"))]
pub struct CheckerboardCopula {
    dim: usize,
    cells_per_axis: u32,
    cells: Vec<CheckerboardCell>,
    cumulative: Vec<f64>,
}

impl TryFrom<CheckerboardRepr> for CheckerboardCopula {
    type Error = CopulaError;
    fn try_from(r: CheckerboardRepr) -> Result<Self, CopulaError> {
        CheckerboardCopula::from_cells(r.cells_per_axis, r.cells)
    }
}

impl From<CheckerboardCopula> for CheckerboardRepr {
    fn from(c: CheckerboardCopula) -> Self {
        CheckerboardRepr { cells_per_axis: c.cells_per_axis, cells: c.cells }
    }
}

impl CheckerboardCopula {
    /// Builds a copula from explicit cells. Zero-mass cells are dropped and
    /// duplicate indices merged; masses must sum to 1 within `1e-12`.
    pub fn from_cells(cells_per_axis: u32, cells: Vec<CheckerboardCell>) -> Result<Self, CopulaError> {
        if cells_per_axis == 0 {
            return Err(CopulaError::ZeroCells);
        }
        let dim = cells.first().map(|c| c.index.len()).ok_or(CopulaError::InvalidCell("no cells"))?;
        if dim == 0 {
            return Err(CopulaError::InvalidCell("empty index"));
        }
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for c in cells {
            if c.index.len() != dim {
                return Err(CopulaError::InvalidCell("index length differs between cells"));
            }
            if c.index.iter().any(|&b| b >= cells_per_axis) {
                return Err(CopulaError::InvalidCell("index outside 0..B"));
            }
            if !(c.mass >= 0.0) || !c.mass.is_finite() {
                return Err(CopulaError::InvalidCell("negative or non-finite mass"));
            }
            *merged.entry(c.index).or_insert(0.0) += c.mass;
        }
        let cells: Vec<CheckerboardCell> = merged
            .into_iter()
            .filter(|(_, m)| *m > 0.0)
            .map(|(index, mass)| CheckerboardCell { index, mass })
            .collect();
        let total: f64 = cells.iter().map(|c| c.mass).sum();
        if fabs(total - 1.0) > 1e-12 {
            return Err(CopulaError::MassSum(total));
        }
        Ok(Self::build(dim, cells_per_axis, cells))
    }

    fn build(dim: usize, cells_per_axis: u32, cells: Vec<CheckerboardCell>) -> Self {
        let mut acc = 0.0;
        let cumulative = cells
            .iter()
            .map(|c| {
                acc += c.mass;
                acc
            })
            .collect();
        CheckerboardCopula { dim, cells_per_axis, cells, cumulative }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> u32 {
        self.cells_per_axis
    }

    /// Occupied cells in lexicographic index order.
    pub fn cells(&self) -> &[CheckerboardCell] {
        &self.cells
    }

    pub fn mass(&self, index: &[u32]) -> f64 {
        self.cells
            .binary_search_by(|c| c.index.as_slice().cmp(index))
            .map_or(0.0, |i| self.cells[i].mass)
    }

    /// Fills `u` with one draw of the copula: a cell chosen by mass, then a
    /// uniform point inside it. Every level lies in `[0, 1)`.
    pub fn draw_uniforms(&self, source: &mut RandomSource, u: &mut [f64]) {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let t = source.uniform() * total;
        let k = self.cumulative.partition_point(|&c| c <= t).min(self.cells.len() - 1);
        let b = self.cells_per_axis as f64;
        for (x, &idx) in u.iter_mut().zip(&self.cells[k].index) {
            *x = source.uniform_range(idx as f64 / b, (idx as f64 + 1.0) / b);
        }
    }

    pub fn draw(&self, marginals: &[Marginal], source: &mut RandomSource) -> Result<Vec<f64>, CopulaError> {
        check_marginals(marginals, self.dim)?;
        let mut u = vec![0.0; self.dim];
        self.draw_uniforms(source, &mut u);
        Ok(u.iter().zip(marginals).map(|(&u, mg)| mg.quantile(u).unwrap_or(f64::NAN)).collect())
    }
}

/// Cell of a pseudo-level along one axis: `[b/B, (b+1)/B)`, top edge closed.
#[inline]
pub fn cell_of(u: f64, cells_per_axis: u32) -> u32 {
    let b = floor(u * cells_per_axis as f64);
    if b < 0.0 {
        0
    } else {
        (b as u32).min(cells_per_axis - 1)
    }
}

/// Cell frequencies of the rows of `pseudo_obs` (`n × m`, values in `[0, 1]`).
pub fn fit_checkerboard(pseudo_obs: &Matrix, cells_per_axis: u32) -> Result<CheckerboardCopula, CopulaError> {
    if cells_per_axis == 0 {
        return Err(CopulaError::ZeroCells);
    }
    let n = pseudo_obs.rows();
    if n == 0 {
        return Err(CopulaError::TooFewObservations);
    }
    let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for v in 0..n {
        let idx: Vec<u32> = pseudo_obs.row(v).iter().map(|&u| cell_of(u, cells_per_axis)).collect();
        *counts.entry(idx).or_insert(0) += 1;
    }
    let cells = counts
        .into_iter()
        .map(|(index, c)| CheckerboardCell { index, mass: c as f64 / n as f64 })
        .collect();
    Ok(CheckerboardCopula::build(pseudo_obs.cols(), cells_per_axis, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Scale;
    use crate::rng::derive_stream;
    use crate::stats::{pearson, spearman};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn corr2(rho: f64) -> CorrelationMatrix {
        CorrelationMatrix::new(&[vec![1.0, rho], vec![rho, 1.0]], false).unwrap()
    }

    #[test]
    fn pseudo_observation_examples() {
        let p = Profile::from_flat(3, 1, vec![0.2, 0.9, 0.5], Scale::Continuous, None).unwrap();
        let po = pseudo_observations(&p).unwrap();
        assert_eq!(po.values.as_slice(), &[0.25, 0.75, 0.5]);
        let p = Profile::from_flat(2, 1, vec![0.4, 0.4], Scale::Continuous, None).unwrap();
        let po = pseudo_observations(&p).unwrap();
        assert_eq!(po.values.as_slice(), &[0.5, 0.5]);
        assert_eq!(po.degenerate, vec![0]);
        let sorted: Vec<f64> = (1..=5).map(|i| i as f64 / 10.0).collect();
        let p = Profile::from_flat(5, 1, sorted, Scale::Continuous, None).unwrap();
        let po = pseudo_observations(&p).unwrap();
        for i in 0..5 {
            close(po.values[(i, 0)], (i + 1) as f64 / 6.0, 1e-15);
        }
        let single = Profile::from_flat(1, 1, vec![0.4], Scale::Continuous, None).unwrap();
        assert_eq!(pseudo_observations(&single), Err(CopulaError::TooFewObservations));
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&Matrix::identity(3)).unwrap();
        assert_eq!(l, Matrix::identity(3));
        let r = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let l = cholesky(&r).unwrap();
        close(l[(1, 0)], 0.5, 1e-15);
        close(l[(1, 1)], libm::sqrt(0.75), 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
        assert!(l.matmul(&l.transpose()).max_abs_diff(&r) <= 1e-10);
        let bad = Matrix::from_rows(&[vec![1.0, 1.5], vec![1.5, 1.0]]).unwrap();
        match cholesky(&bad) {
            Err(CopulaError::NotPositiveDefinite(min)) => close(min, -0.5, 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn correlation_validation_and_repair() {
        assert!(matches!(
            CorrelationMatrix::new(&[vec![1.0, 0.3], vec![0.2, 1.0]], false),
            Err(CopulaError::NotSymmetric(..))
        ));
        assert!(matches!(
            CorrelationMatrix::new(&[vec![1.0, 1.5], vec![1.5, 1.0]], false),
            Err(CopulaError::OutOfRange(..))
        ));
        let indefinite = vec![vec![1.0, 0.9, -0.9], vec![0.9, 1.0, 0.9], vec![-0.9, 0.9, 1.0]];
        assert!(matches!(CorrelationMatrix::new(&indefinite, false), Err(CopulaError::NotPositiveDefinite(_))));
        let repaired = CorrelationMatrix::new(&indefinite, true).unwrap();
        assert!(repaired.min_eigenvalue() > 0.0);
        for i in 0..3 {
            assert_eq!(repaired.get(i, i), 1.0);
        }
        assert!(cholesky(repaired.matrix()).is_ok());
    }

    #[test]
    fn independence_copula() {
        let g = GaussianCopula::new(&CorrelationMatrix::identity(2)).unwrap();
        let mut s = derive_stream(3, 0);
        let mg = [Marginal::Uniform, Marginal::Uniform];
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for _ in 0..100_000 {
            let row = g.draw(&mg, &mut s).unwrap();
            a.push(row[0]);
            b.push(row[1]);
        }
        assert!(pearson(&a, &b).unwrap().abs() < 0.01);
    }

    #[test]
    fn comonotone_copula() {
        let mg = [Marginal::Beta { alpha: 2.0, beta: 3.0 }, Marginal::Beta { alpha: 2.0, beta: 3.0 }];
        let mut s = derive_stream(4, 0);
        for _ in 0..1000 {
            let row = gaussian_copula_draw(&corr2(1.0), &mg, &mut s).unwrap();
            assert_eq!(row[0], row[1]);
        }
    }

    #[test]
    fn gaussian_copula_spearman() {
        let g = GaussianCopula::new(&corr2(0.8)).unwrap();
        let mut s = derive_stream(5, 0);
        let mg = [Marginal::Uniform, Marginal::Uniform];
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for _ in 0..100_000 {
            let row = g.draw(&mg, &mut s).unwrap();
            a.push(row[0]);
            b.push(row[1]);
        }
        close(spearman(&a, &b).unwrap(), 0.785_939_282_606_727_7, 0.02);
    }

    #[test]
    fn discrete_copula_attenuates() {
        let g = GaussianCopula::new(&corr2(0.6)).unwrap();
        let mg = [Marginal::Binomial { levels: 3, p: 0.5 }, Marginal::Binomial { levels: 3, p: 0.4 }];
        let mut s = derive_stream(6, 0);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for _ in 0..50_000 {
            let row = g.draw(&mg, &mut s).unwrap();
            a.push(row[0]);
            b.push(row[1]);
        }
        let target = crate::special::gaussian_spearman(0.6);
        assert!(spearman(&a, &b).unwrap().abs() <= target + 0.02);
    }

    #[test]
    fn copula_marginal_mismatch() {
        let g = GaussianCopula::new(&corr2(0.3)).unwrap();
        let mut s = derive_stream(1, 1);
        assert!(matches!(g.draw(&[Marginal::Uniform], &mut s), Err(CopulaError::Dimension { .. })));
        assert_eq!(
            g.draw(&[Marginal::Uniform, Marginal::Binomial { levels: 2, p: 0.5 }], &mut s),
            Err(CopulaError::MixedScales)
        );
    }

    #[test]
    fn checkerboard_fit_examples() {
        let po = Matrix::from_rows(&[vec![0.25, 0.25], vec![0.75, 0.75]]).unwrap();
        let cb = fit_checkerboard(&po, 2).unwrap();
        assert_eq!(cb.mass(&[0, 0]), 0.5);
        assert_eq!(cb.mass(&[1, 1]), 0.5);
        assert_eq!(cb.mass(&[0, 1]), 0.0);
        let cb = fit_checkerboard(&po, 1).unwrap();
        assert_eq!(cb.cells().len(), 1);
        assert_eq!(cb.mass(&[0, 0]), 1.0);
        // top edge closed
        let top = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(fit_checkerboard(&top, 4).unwrap().cells()[0].index, vec![3, 0]);
    }

    #[test]
    fn checkerboard_independent_uniforms() {
        let mut s = derive_stream(8, 0);
        let n = 10_000;
        let data: Vec<f64> = (0..2 * n).map(|_| s.uniform()).collect();
        let cb = fit_checkerboard(&Matrix::from_vec(n, 2, data), 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                close(cb.mass(&[i, j]), 1.0 / 16.0, 0.02);
            }
        }
    }

    #[test]
    fn checkerboard_draw_support_and_refit() {
        let single = CheckerboardCopula::from_cells(4, vec![CheckerboardCell { index: vec![2, 1], mass: 1.0 }]).unwrap();
        let mut s = derive_stream(9, 0);
        let mut u = [0.0; 2];
        for _ in 0..1000 {
            single.draw_uniforms(&mut s, &mut u);
            assert!((0.5..0.75).contains(&u[0]) && (0.25..0.5).contains(&u[1]));
        }
        let cells = vec![
            CheckerboardCell { index: vec![0, 0], mass: 0.4 },
            CheckerboardCell { index: vec![1, 2], mass: 0.35 },
            CheckerboardCell { index: vec![2, 1], mass: 0.25 },
        ];
        let cb = CheckerboardCopula::from_cells(3, cells).unwrap();
        let n = 100_000;
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            cb.draw_uniforms(&mut s, &mut u);
            assert!(u.iter().all(|x| (0.0..1.0).contains(x)));
            data.extend_from_slice(&u);
        }
        let refit = fit_checkerboard(&Matrix::from_vec(n, 2, data), 3).unwrap();
        for c in cb.cells() {
            close(refit.mass(&c.index), c.mass, 0.02);
        }
    }

    #[test]
    fn checkerboard_validation() {
        assert!(CheckerboardCopula::from_cells(0, vec![]).is_err());
        let bad_sum = vec![CheckerboardCell { index: vec![0], mass: 0.5 }];
        assert!(matches!(CheckerboardCopula::from_cells(2, bad_sum), Err(CopulaError::MassSum(_))));
        let outside = vec![CheckerboardCell { index: vec![5], mass: 1.0 }];
        assert!(CheckerboardCopula::from_cells(2, outside).is_err());
    }

    #[test]
    fn flat_checkerboard_is_independent() {
        let cb = CheckerboardCopula::from_cells(1, vec![CheckerboardCell { index: vec![0, 0], mass: 1.0 }]).unwrap();
        let mut s = derive_stream(10, 0);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let mut u = [0.0; 2];
        for _ in 0..50_000 {
            cb.draw_uniforms(&mut s, &mut u);
            a.push(u[0]);
            b.push(u[1]);
        }
        assert!(pearson(&a, &b).unwrap().abs() < 0.015);
        close(crate::stats::mean(&a), 0.5, 0.01);
    }
}
