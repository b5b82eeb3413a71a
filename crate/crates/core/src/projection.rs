//! Path "unwinding": PCA of the points of interest followed by a ridge CCA
//! of the path against a polynomial in the path index.
//!
//! Everything runs in PCA-score space. The path side of the CCA carries the
//! ridge; the design side is unregularized and is orthonormalized
//! internally.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{center, center_with, column_means, inv_sqrt_spd, sorted_symmetric_eigen, PcaFit};

pub const DEFAULT_FOLDS: usize = 5;
const GRID_LEN: usize = 8;
const GRID_LOW: f64 = 1e-4;
const GRID_HIGH: f64 = 1e2;
const FALLBACK_SCALE: f64 = 0.1;

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub pca_dims: usize,
    pub degree: usize,
    /// Ridge on the path-score covariance; `None` selects it by
    /// cross-validation over the default grid.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
}

impl ProjectionConfig {
    pub fn new(pca_dims: usize, degree: usize) -> Self {
        Self {
            pca_dims,
            degree,
            lambda: None,
            bandwidth: None,
            cv_folds: DEFAULT_FOLDS,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_bandwidth(mut self, h: f64) -> Self {
        self.bandwidth = Some(h);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.pca_dims < 2 {
            return Err(Error::invalid("pca_dims must be at least 2 for a planar projection"));
        }
        if self.degree == 0 {
            return Err(Error::invalid("degree must be at least 1"));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("lambda must be non-negative, got {l}")));
            }
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
            }
        }
        if self.cv_folds < 2 {
            return Err(Error::invalid("cv_folds must be at least 2"));
        }
        Ok(())
    }
}

/// Ordered high-dimensional path points, one row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    points: DMatrix<f64>,
}

impl PathMatrix {
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        if points.nrows() < 2 {
            return Err(Error::TooFewRows {
                needed: 2,
                found: points.nrows(),
            });
        }
        Ok(Self { points })
    }

    /// The rows of `data` listed in `path`, in order.
    pub fn from_rows(data: &Dataset, path: &[usize]) -> Result<Self> {
        if let Some(&r) = path.iter().find(|&&r| r >= data.n_rows()) {
            return Err(Error::UnknownVertex(r));
        }
        Self::new(data.rows_matrix(path))
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub coords: Vec<[f64; 2]>,
    pub path_coords: Vec<[f64; 2]>,
    pub variance_retained: f64,
    /// Unregularized canonical correlations between the projected path and
    /// the polynomial design; zero where fewer than two exist.
    pub canonical_correlations: [f64; 2],
    /// The ridge actually used (chosen by CV when the config left it open).
    pub lambda: f64,
    /// The polynomial degree actually used.
    pub degree: usize,
    pub warnings: Vec<String>,
    pub config: ProjectionConfig,
}

/// `k × d` matrix with row `i` (1-based) equal to `(i, i², …, i^d)`.
pub fn polynomial_design(k: usize, d: usize) -> Result<DMatrix<f64>> {
    if d == 0 || k < 2 {
        return Err(Error::invalid(format!(
            "polynomial design needs d >= 1 and k >= 2, got k={k}, d={d}"
        )));
    }
    Ok(DMatrix::from_fn(k, d, |r, c| ((r + 1) as f64).powi(c as i32 + 1)))
}

/// Column-centered polynomial design.
pub fn centered_polynomial_design(k: usize, d: usize) -> Result<DMatrix<f64>> {
    Ok(center(&polynomial_design(k, d)?))
}

/// Leading canonical pairs of a ridge CCA between centered `x` (ridge
/// `lambda` on its covariance) and centered `y` (no ridge).
#[derive(Debug, Clone)]
struct Rcca {
    /// `q × m` weights on the x side.
    x_weights: DMatrix<f64>,
    /// `d × m` weights on the y side.
    y_weights: DMatrix<f64>,
    correlations: Vec<f64>,
}

fn fit_rcca(xc: &DMatrix<f64>, yc: &DMatrix<f64>, lambda: f64) -> Result<Rcca> {
    let k = xc.nrows();
    if k < 2 || yc.nrows() != k {
        return Err(Error::invalid("rCCA needs at least two paired rows"));
    }
    let denom = (k - 1) as f64;
    let q = xc.ncols();
    let d = yc.ncols();

    // Orthonormalize the design: yc D⁻¹ = Q R with D the column norms.
    let norms: Vec<f64> = yc.column_iter().map(|c| c.norm()).collect();
    if norms.iter().any(|&n| n.is_nan() || n <= 0.0) {
        return Err(Error::Singular("design has a constant column".into()));
    }
    let scaled = DMatrix::from_fn(k, d, |r, c| yc[(r, c)] / norms[c]);
    let qr = scaled.qr();
    let r = qr.r();
    let rmax = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if d > k || r.diagonal().iter().any(|v| v.abs() <= rmax * 1e-10) {
        return Err(Error::Singular(format!(
            "design covariance is singular (degree {d} with {k} path points)"
        )));
    }
    let qm = qr.q();

    let mut cxx = xc.tr_mul(xc) / denom;
    for i in 0..q {
        cxx[(i, i)] += lambda;
    }
    let cxx_is = inv_sqrt_spd(&cxx, "regularized path-score")?;
    // With Q orthonormal, Cyy = I / (k - 1).
    let cxy = xc.tr_mul(&qm) / denom;
    let m = &cxx_is * cxy * denom.sqrt();
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let pairs = order.len();
    let mut x_weights = DMatrix::zeros(q, pairs);
    let mut y_weights = DMatrix::zeros(d, pairs);
    let mut correlations = Vec::with_capacity(pairs);
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("design triangular factor".into()))?;
    for (j, &o) in order.iter().enumerate() {
        let mut uj: DVector<f64> = u.column(o).into_owned();
        let mut vj: DVector<f64> = v_t.row(o).transpose();
        // Orient the pair so the y-side variate covaries positively with the
        // j-th orthonormalized design column (the first nonzero one when that
        // coefficient vanishes).
        let pivot = (j..d)
            .chain(0..j)
            .map(|i| vj[i])
            .find(|v| v.abs() > 1e-12)
            .unwrap_or(1.0);
        if pivot < 0.0 {
            uj.neg_mut();
            vj.neg_mut();
        }
        x_weights.set_column(j, &(&cxx_is * uj));
        let b = &r_inv * vj * denom.sqrt();
        let b = DVector::from_fn(d, |i, _| b[i] / norms[i]);
        y_weights.set_column(j, &b);
        correlations.push(svd.singular_values[o].clamp(0.0, 1.0));
    }
    Ok(Rcca {
        x_weights,
        y_weights,
        correlations,
    })
}

fn covariance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.sum() / n, b.sum() / n);
    a.iter().zip(b.iter()).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0).max(1.0)
}

fn correlation(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let denom = (covariance(a, a) * covariance(b, b)).sqrt();
    if denom > 0.0 {
        covariance(a, b) / denom
    } else {
        0.0
    }
}

/// Orthonormal basis of the column space of centered `m`, dropping
/// directions with negligible spread.
fn column_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let top = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| top > 0.0 && svd.singular_values[i] > top * 1e-10)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Unregularized canonical correlations between two centered blocks,
/// largest first, padded with zeros to two values.
fn plain_canonical_correlations(a: &DMatrix<f64>, b: &DMatrix<f64>) -> [f64; 2] {
    let (qa, qb) = (column_basis(a), column_basis(b));
    let mut out = [0.0; 2];
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return out;
    }
    let mut sv: Vec<f64> = (qa.transpose() * qb).singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    for (o, v) in out.iter_mut().zip(sv) {
        *o = v.clamp(0.0, 1.0);
    }
    out
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |r, c| m[(rows[r], c)])
}

/// Mean of the diagonal of the path-score covariance; the scale of the
/// default lambda grid.
pub fn mean_score_variance(path_scores: &DMatrix<f64>) -> f64 {
    let k = path_scores.nrows();
    if k < 2 || path_scores.ncols() == 0 {
        return 0.0;
    }
    let c = center(path_scores);
    c.iter().map(|v| v * v).sum::<f64>() / ((k - 1) as f64 * path_scores.ncols() as f64)
}

/// Eight log-spaced values from `1e-4` to `1e2` times the mean path-score
/// variance.
pub fn default_lambda_grid(path_scores: &DMatrix<f64>) -> Vec<f64> {
    let scale = mean_score_variance(path_scores);
    (0..GRID_LEN)
        .map(|i| {
            let t = i as f64 / (GRID_LEN - 1) as f64;
            scale * GRID_LOW * (GRID_HIGH / GRID_LOW).powf(t)
        })
        .collect()
}

/// Row indices held out by each fold: row `i` belongs to fold `i mod folds`.
pub fn cv_folds(k: usize, folds: usize) -> Vec<Vec<usize>> {
    (0..folds)
        .map(|f| (0..k).filter(|i| i % folds == f).collect())
        .collect()
}

/// Out-of-fold first canonical correlation for one lambda: the first pair is
/// fitted on each training split, applied to the held-out rows, and the
/// correlation is taken over all held-out scores pooled.
fn cv_score(path_scores: &DMatrix<f64>, design: &DMatrix<f64>, lambda: f64, folds: usize) -> Result<f64> {
    let k = path_scores.nrows();
    let mut xs = Vec::with_capacity(k);
    let mut ys = Vec::with_capacity(k);
    for held in cv_folds(k, folds) {
        let train: Vec<usize> = (0..k).filter(|i| i % folds != held[0] % folds).collect();
        let xt = select_rows(path_scores, &train);
        let yt = select_rows(design, &train);
        let (mx, my) = (column_means(&xt), column_means(&yt));
        let fit = fit_rcca(&center_with(&xt, &mx), &center_with(&yt, &my), lambda)?;
        let xh = center_with(&select_rows(path_scores, &held), &mx) * fit.x_weights.column(0);
        let yh = center_with(&select_rows(design, &held), &my) * fit.y_weights.column(0);
        xs.extend(xh.iter().copied());
        ys.extend(yh.iter().copied());
    }
    let r = correlation(&DVector::from_vec(xs), &DVector::from_vec(ys));
    if !r.is_finite() {
        return Err(Error::Singular("cross-validated correlation is undefined".into()));
    }
    Ok(r)
}

/// Lambda from `grid` with the best out-of-fold first canonical correlation;
/// ties go to the largest lambda.
pub fn cv_select_lambda(
    path_scores: &DMatrix<f64>,
    design: &DMatrix<f64>,
    grid: &[f64],
    folds: usize,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    let k = path_scores.nrows();
    if folds < 2 || folds > k {
        return Err(Error::invalid(format!(
            "need 2 <= folds <= k, got folds={folds}, k={k}"
        )));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|&l| cv_score(path_scores, design, l, folds))
        .collect::<Result<_>>()?;
    Ok(grid[best_index(grid, &scores)])
}

fn best_index(grid: &[f64], scores: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..grid.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && grid[i] > grid[best]) {
            best = i;
        }
    }
    best
}

/// Unit vector orthogonal to `w` along the leading remaining direction of
/// `pc` (centered path scores); falls back to a coordinate axis when the
/// path has no variance left.
fn orthogonal_axis(pc: &DMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
    let q = w.len();
    let proj = pc * w;
    let resid = pc - &proj * w.transpose();
    let (values, vectors) = sorted_symmetric_eigen(resid.tr_mul(&resid));
    let max = values.iter().copied().fold(0.0_f64, f64::max);
    let scale = pc.iter().map(|v| v * v).sum::<f64>();
    let mut axis = if max > scale * 1e-20 && max > 0.0 {
        vectors.column(0).into_owned()
    } else {
        let j = (0..q)
            .min_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()))
            .unwrap_or(0);
        DVector::from_fn(q, |i, _| if i == j { 1.0 } else { 0.0 })
    };
    axis -= w * w.dot(&axis);
    let n = axis.norm();
    axis /= n;
    let pivot = axis
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    if pivot < 0.0 {
        axis.neg_mut();
    }
    axis
}

fn to_pairs(m: &DMatrix<f64>) -> Vec<[f64; 2]> {
    (0..m.nrows()).map(|r| [m[(r, 0)], m[(r, 1)]]).collect()
}

/// Projects the points of interest `x` onto the plane that best unwinds
/// `path`. Coordinates are in PCA-score units (Euclidean, plot-ready).
pub fn pca_rcca_project(
    x: &DMatrix<f64>,
    path: &PathMatrix,
    config: &ProjectionConfig,
) -> Result<ProjectionResult> {
    config.validate()?;
    if path.points().ncols() != x.ncols() {
        return Err(Error::DimensionMismatch {
            what: "path dimension".into(),
            expected: x.ncols(),
            found: path.points().ncols(),
        });
    }
    let mut warnings = Vec::new();
    let fit = PcaFit::fit(x)?;
    fit.check_dims(config.pca_dims)?;
    let q = config.pca_dims;
    let scores = fit.transform(x, q);
    let path_scores = fit.transform(path.points(), q);
    let k = path.len();

    let mut degree = config.degree;
    if k <= degree + 1 && degree > 1 {
        let reduced = k.saturating_sub(2).max(1);
        warnings.push(format!(
            "degree {degree} is too high for a path of {k} points; using {reduced}"
        ));
        degree = reduced;
    }
    let design = polynomial_design(k, degree)?;

    let lambda = match config.lambda {
        Some(l) => l,
        None => {
            let grid = default_lambda_grid(&path_scores);
            let folds = config.cv_folds.min(k);
            match cv_select_lambda(&path_scores, &design, &grid, folds) {
                Ok(l) => l,
                Err(e) => {
                    let l = FALLBACK_SCALE * mean_score_variance(&path_scores);
                    warnings.push(format!(
                        "lambda cross-validation failed ({e}); using fixed ridge {l:e}"
                    ));
                    l
                }
            }
        }
    };

    let pc = center(&path_scores);
    let yc = center(&design);
    let cca = fit_rcca(&pc, &yc, lambda)?;
    let design_variate = |j: usize| -> DVector<f64> { &yc * cca.y_weights.column(j) };

    let mut w1: DVector<f64> = cca.x_weights.column(0).into_owned();
    w1 /= w1.norm();
    if covariance(&(&pc * &w1), &design_variate(0)) < 0.0 {
        w1.neg_mut();
    }
    let mut w2 = None;
    if cca.correlations.len() >= 2 {
        let a2: DVector<f64> = cca.x_weights.column(1).into_owned();
        let mut r = &a2 - &w1 * w1.dot(&a2);
        let n = r.norm();
        if n > a2.norm() * 1e-10 {
            r /= n;
            if covariance(&(&pc * &r), &design_variate(1)) < 0.0 {
                r.neg_mut();
            }
            w2 = Some(r);
        }
    }
    let w2 = match w2 {
        Some(w) => w,
        None => {
            if degree > 1 {
                warnings.push("second canonical direction is degenerate; using the leading orthogonal principal axis".into());
            }
            orthogonal_axis(&pc, &w1)
        }
    };

    let mut basis = DMatrix::zeros(q, 2);
    basis.set_column(0, &w1);
    basis.set_column(1, &w2);
    let plane = &pc * &basis;
    Ok(ProjectionResult {
        coords: to_pairs(&(&scores * &basis)),
        path_coords: to_pairs(&(&path_scores * &basis)),
        variance_retained: fit.variance_retained(q),
        canonical_correlations: plain_canonical_correlations(&plane, &yc),
        lambda,
        degree,
        warnings,
        config: config.clone(),
    })
}
