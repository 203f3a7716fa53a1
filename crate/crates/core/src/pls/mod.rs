//! NIPALS PLS1 regression, component selection and segmented PLS.

mod cv;

pub use cv::{cv_curve, pls_cv, segmented_pls, select_components, GramFolds, PlsCv, SegmentedPls};

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative size of ‖Xᵀy‖ (against the first component's) below which no
/// further latent variable can be extracted.
const DEFLATION_TOL: f64 = 1e-12;

/// How many latent variables a PLS model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentRule {
    Fixed(usize),
    /// Inner k-fold CV over `1..=max`, keeping the smallest minimizer.
    InnerCv { max: usize, folds: usize },
}

impl Default for ComponentRule {
    fn default() -> Self {
        ComponentRule::InnerCv { max: 15, folds: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlsModel {
    requested: usize,
    x_mean: Array1<f64>,
    y_mean: f64,
    /// `D × A` unit-norm weight vectors.
    weights: Array2<f64>,
    /// `D × A` X-loadings.
    loadings: Array2<f64>,
    /// y-loadings, one per component.
    y_loadings: Array1<f64>,
    coefficients: Array1<f64>,
    intercept: f64,
}

/// Fits NIPALS PLS1 with up to `n_components` latent variables.
///
/// Extraction stops early when the residual covariance ‖Xᵀy‖ vanishes; the
/// achieved count is reported by [`PlsModel::n_components`].
pub fn pls_fit(x: ArrayView2<f64>, y: ArrayView1<f64>, n_components: usize) -> Result<PlsModel> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if n < 2 {
        return Err(Error::invalid("PLS needs at least 2 samples"));
    }
    if n_components == 0 || n_components > (n - 1).min(d) {
        return Err(Error::invalid(format!(
            "PLS components must satisfy 1 <= A <= min(n-1, D) = {} (A={n_components})",
            (n - 1).min(d)
        )));
    }
    let x_mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let y_mean = y.mean().expect("n >= 2");
    let mut xk = &x - &x_mean;
    let mut yk = &y - y_mean;

    let mut weights = Array2::zeros((d, n_components));
    let mut loadings = Array2::zeros((d, n_components));
    let mut y_loadings = Array1::zeros(n_components);
    let mut first_norm = None;
    let mut achieved = 0;
    for a in 0..n_components {
        let mut w = xk.t().dot(&yk);
        let norm = w.dot(&w).sqrt();
        let reference = *first_norm.get_or_insert(norm);
        if !(norm > DEFLATION_TOL * reference) || norm == 0.0 {
            break;
        }
        w /= norm;
        let t = xk.dot(&w);
        let tt = t.dot(&t);
        if !(tt > 0.0) {
            break;
        }
        let p = xk.t().dot(&t) / tt;
        let q = yk.dot(&t) / tt;
        for (mut row, &ti) in xk.rows_mut().into_iter().zip(t.iter()) {
            row.scaled_add(-ti, &p);
        }
        yk.scaled_add(-q, &t);
        weights.column_mut(a).assign(&w);
        loadings.column_mut(a).assign(&p);
        y_loadings[a] = q;
        achieved = a + 1;
    }
    if achieved == 0 {
        return Err(Error::Degenerate("PLS: response has no covariance with the predictors".into()));
    }
    let weights = weights.slice(s![.., ..achieved]).to_owned();
    let loadings = loadings.slice(s![.., ..achieved]).to_owned();
    let y_loadings = y_loadings.slice(s![..achieved]).to_owned();
    let coefficients = collapse(&weights, &loadings, &y_loadings);
    let intercept = y_mean - x_mean.dot(&coefficients);
    Ok(PlsModel { requested: n_components, x_mean, y_mean, weights, loadings, y_loadings, coefficients, intercept })
}

/// `B = W (PᵀW)⁻¹ q`; `PᵀW` is upper triangular for NIPALS, so a back
/// substitution suffices.
fn collapse(w: &Array2<f64>, p: &Array2<f64>, q: &Array1<f64>) -> Array1<f64> {
    let a = q.len();
    let r = p.t().dot(w);
    let mut z = Array1::zeros(a);
    for i in (0..a).rev() {
        let tail: f64 = (i + 1..a).map(|j| r[[i, j]] * z[j]).sum();
        z[i] = (q[i] - tail) / r[[i, i]];
    }
    w.dot(&z)
}

impl PlsModel {
    /// Latent variables actually extracted.
    pub fn n_components(&self) -> usize {
        self.y_loadings.len()
    }

    pub fn requested_components(&self) -> usize {
        self.requested
    }

    pub fn dim(&self) -> usize {
        self.x_mean.len()
    }

    pub fn x_mean(&self) -> &Array1<f64> {
        &self.x_mean
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn loadings(&self) -> &Array2<f64> {
        &self.loadings
    }

    pub fn y_loadings(&self) -> &Array1<f64> {
        &self.y_loadings
    }

    pub fn coefficients(&self) -> &Array1<f64> {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    fn check(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.ncols() });
        }
        Ok(())
    }

    /// `ŷ = (X - x̄)·B + ȳ`.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.check(&x)?;
        Ok((&x - &self.x_mean).dot(&self.coefficients) + self.y_mean)
    }

    /// Predictions after 1, 2, …, A components (`n × A`), by running the
    /// score/deflation recursion on each row.
    pub fn predict_prefixes(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let a = self.n_components();
        let mut out = Array2::zeros((x.nrows(), a));
        for (i, row) in x.rows().into_iter().enumerate() {
            let mut r = &row - &self.x_mean;
            let mut yhat = self.y_mean;
            for c in 0..a {
                let t = r.dot(&self.weights.column(c));
                yhat += t * self.y_loadings[c];
                r.scaled_add(-t, &self.loadings.column(c));
                out[[i, c]] = yhat;
            }
        }
        Ok(out)
    }

    /// Prediction through the latent-variable recursion with all components.
    pub fn predict_recursive(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        let prefixes = self.predict_prefixes(x)?;
        Ok(prefixes.column(self.n_components() - 1).to_owned())
    }
}

/// Largest component count usable with `n` training rows and `d` columns.
pub(crate) fn max_components(n: usize, d: usize) -> usize {
    n.saturating_sub(1).min(d)
}

/// Fits a model whose component count follows `rule`; counts beyond what
/// the data supports are clamped.
pub fn fit_with_rule(x: ArrayView2<f64>, y: ArrayView1<f64>, rule: ComponentRule, seed: u64) -> Result<PlsModel> {
    let cap = max_components(x.nrows(), x.ncols());
    let a = match rule {
        ComponentRule::Fixed(a) => a.min(cap),
        ComponentRule::InnerCv { max, folds } => select_components(x, y, folds, max.min(cap), seed)?,
    };
    pls_fit(x, y, a)
}
