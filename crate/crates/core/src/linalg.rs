//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows().max(1) as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// Subtracts `means` from every row.
pub fn center_with(x: &DMatrix<f64>, means: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    out
}

pub fn center(x: &DMatrix<f64>) -> DMatrix<f64> {
    center_with(x, &column_means(x))
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order.
pub fn sorted_symmetric_eigen(m: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Flips each column so its largest-magnitude entry is positive.
pub fn canonical_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Inverse square root of a symmetric positive-definite matrix.
pub fn inv_sqrt_spd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let (values, vectors) = sorted_symmetric_eigen(m.clone());
    let max = values.iter().copied().fold(0.0_f64, f64::max);
    let floor = max * 1e-12;
    if values.iter().any(|&v| v <= floor) || max <= 0.0 {
        return Err(Error::Singular(format!("{what} covariance is not positive definite")));
    }
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, c)] / values[c].sqrt()
    });
    Ok(&scaled * vectors.transpose())
}

/// Singular values of `x`, descending.
pub fn singular_values(x: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = if x.nrows() == 0 || x.ncols() == 0 {
        Vec::new()
    } else {
        x.singular_values().iter().copied().collect()
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Principal axes of a data matrix (rows are observations).
#[derive(Debug, Clone)]
pub struct PcaFit {
    mean: DVector<f64>,
    /// p × r, columns ordered by decreasing variance.
    components: DMatrix<f64>,
    /// Variance along each component, descending.
    variances: Vec<f64>,
    total_variance: f64,
    n_rows: usize,
}

impl PcaFit {
    /// Centers (without scaling) and decomposes. Uses the p×p covariance
    /// when p ≤ n and the n×n Gram matrix otherwise.
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 {
            return Err(Error::TooFewRows { needed: 2, found: n });
        }
        let mean = column_means(x);
        let xc = center_with(x, &mean);
        let denom = (n - 1) as f64;
        let total_variance = xc.iter().map(|v| v * v).sum::<f64>() / denom;

        let (variances, mut components) = if p <= n {
            let cov = xc.tr_mul(&xc) / denom;
            let (values, vectors) = sorted_symmetric_eigen(cov);
            (values.iter().map(|v| v.max(0.0)).collect::<Vec<_>>(), vectors)
        } else {
            let gram = &xc * xc.transpose();
            let (values, vectors) = sorted_symmetric_eigen(gram);
            let r = n.min(p);
            let mut comps = DMatrix::zeros(p, r);
            let max = values.iter().copied().fold(0.0_f64, f64::max);
            for k in 0..r {
                let lambda = values[k];
                // Directions with (numerically) zero variance stay zero.
                if lambda > max * 1e-14 && lambda > 0.0 {
                    let v = xc.tr_mul(&vectors.column(k)) / lambda.sqrt();
                    comps.set_column(k, &v);
                }
            }
            let vars = values.iter().take(r).map(|v| v.max(0.0) / denom).collect();
            (vars, comps)
        };
        canonical_signs(&mut components);
        Ok(Self {
            mean,
            components,
            variances,
            total_variance,
            n_rows: n,
        })
    }

    /// Largest admissible number of retained dimensions, `min(n - 1, p)`.
    pub fn max_dims(&self) -> usize {
        (self.n_rows - 1).min(self.mean.len())
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    pub fn check_dims(&self, dims: usize) -> Result<()> {
        if dims == 0 || dims > self.max_dims() {
            return Err(Error::invalid(format!(
                "dims must lie in 1..={}, got {dims}",
                self.max_dims()
            )));
        }
        Ok(())
    }

    /// Fraction of total variance captured by the top `dims` components.
    pub fn variance_retained(&self, dims: usize) -> f64 {
        if self.total_variance <= 0.0 {
            return 1.0;
        }
        let kept: f64 = self.variances.iter().take(dims).sum();
        (kept / self.total_variance).clamp(0.0, 1.0)
    }

    pub fn components(&self, dims: usize) -> DMatrix<f64> {
        self.components.columns(0, dims).into_owned()
    }

    /// Scores of arbitrary rows in the top `dims` components.
    pub fn transform(&self, x: &DMatrix<f64>, dims: usize) -> DMatrix<f64> {
        center_with(x, &self.mean) * self.components(dims)
    }
}

/// Projects the dataset onto its top `dims` principal components.
///
/// Returns the (centered) scores and the fraction of variance retained.
pub fn global_pca(data: &Dataset, dims: usize) -> Result<(Dataset, f64)> {
    let x = data.to_matrix();
    let fit = PcaFit::fit(&x)?;
    fit.check_dims(dims)?;
    let scores = fit.transform(&x, dims);
    let names = (1..=dims).map(|k| format!("PC{k}")).collect();
    let reduced = Dataset::from_matrix(data.ids().to_vec(), names, &scores)?;
    Ok((reduced, fit.variance_retained(dims)))
}
