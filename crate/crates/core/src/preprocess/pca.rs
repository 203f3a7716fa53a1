//! Principal component projection fitted on training spectra.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Array1<f64>,
    /// `k × D`, orthonormal rows in descending eigenvalue order.
    components: Array2<f64>,
    eigenvalues: Vec<f64>,
}

/// Relative eigenvalue floor below which a component carries no variance.
const NULL_VARIANCE: f64 = 1e-12;

/// Fits `k` components with `k <= min(n - 1, D)`.
///
/// With fewer samples than points the `n × n` Gram matrix is decomposed and
/// mapped back (`v = Xᵀu / ‖Xᵀu‖`); otherwise the `D × D` covariance.
/// Each component's largest-magnitude loading is made positive.
pub fn pca_fit(x: ArrayView2<f64>, k: usize) -> Result<PcaModel> {
    let (n, d) = x.dim();
    if n < 2 || k == 0 || k > (n - 1).min(d) {
        return Err(Error::invalid(format!(
            "PCA components must satisfy 1 <= k <= min(n-1, D) = {} (k={k})",
            (n.max(1) - 1).min(d)
        )));
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let centered = &x - &mean;
    let denom = (n - 1) as f64;

    let mut components = Array2::zeros((k, d));
    let mut eigenvalues = Vec::with_capacity(k);
    if n <= d {
        let gram = centered.dot(&centered.t()) / denom;
        let (vals, vecs) = sorted_eigen(&gram);
        let floor = NULL_VARIANCE * vals[0].abs().max(f64::MIN_POSITIVE);
        for c in 0..k {
            if vals[c] <= floor {
                return Err(Error::Degenerate(format!("PCA component {} has zero variance", c + 1)));
            }
            let u = Array1::from_iter(vecs.column(c).iter().copied());
            let v = centered.t().dot(&u);
            let norm = v.dot(&v).sqrt();
            components.row_mut(c).assign(&(v / norm));
            eigenvalues.push(vals[c]);
        }
    } else {
        let cov = centered.t().dot(&centered) / denom;
        let (vals, vecs) = sorted_eigen(&cov);
        for c in 0..k {
            components.row_mut(c).assign(&Array1::from_iter(vecs.column(c).iter().copied()));
            eigenvalues.push(vals[c]);
        }
    }
    for mut row in components.rows_mut() {
        let pivot = row.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            row.mapv_inplace(|v| -v);
        }
    }
    Ok(PcaModel { mean, components, eigenvalues })
}


/// Eigen-pairs of a symmetric matrix, sorted by descending eigenvalue
/// (ties by original index).
fn sorted_eigen(m: &Array2<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let eig = SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    /// Training-covariance variance captured by each component.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn transform_one(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), found: x.len() });
        }
        Ok(self.components.dot(&(&x - &self.mean)))
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), found: x.ncols() });
        }
        Ok((&x - &self.mean).dot(&self.components.t()))
    }

    pub fn reconstruct(&self, scores: ArrayView2<f64>) -> Array2<f64> {
        scores.dot(&self.components) + &self.mean
    }
}
