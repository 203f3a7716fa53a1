//! Cross-validation helpers specific to PLS.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::Serialize;

use super::{fit_with_rule, max_components, pls_fit, ComponentRule, DEFLATION_TOL};
use crate::dataset::{kfold_split, FoldSplit};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Seed for the model fitted inside fold `fold` of a CV run seeded with `seed`.
pub(crate) fn fold_model_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(derive_seed(seed, fold as u64), 1)
}

fn check_split(n: usize, split: &FoldSplit) -> Result<()> {
    if split.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: split.n });
    }
    Ok(())
}

/// Pooled RMSECV for every component count `1..=max` over `split`.
///
/// Each fold fits once with the largest feasible count; the nested NIPALS
/// models give all smaller counts for free. A fold that extracts fewer
/// components keeps its last prediction for larger counts.
pub fn cv_curve(x: ArrayView2<f64>, y: ArrayView1<f64>, split: &FoldSplit, max: usize) -> Result<Vec<f64>> {
    check_split(x.nrows(), split)?;
    if max == 0 {
        return Err(Error::invalid("component search needs max >= 1"));
    }
    let mut sse = vec![0.0; max];
    for fold in &split.folds {
        let xt = x.select(Axis(0), &fold.train);
        let yt = y.select(Axis(0), &fold.train);
        let a = max.min(max_components(xt.nrows(), xt.ncols()));
        let model = pls_fit(xt.view(), yt.view(), a)?;
        let prefixes = model.predict_prefixes(x.select(Axis(0), &fold.validation).view())?;
        let got = model.n_components();
        for (r, &i) in fold.validation.iter().enumerate() {
            for (c, acc) in sse.iter_mut().enumerate() {
                let e = prefixes[[r, c.min(got - 1)]] - y[i];
                *acc += e * e;
            }
        }
    }
    let n = x.nrows() as f64;
    Ok(sse.into_iter().map(|s| (s / n).sqrt()).collect())
}

/// Index (1-based count) of the smallest value; ties go to the fewest components.
fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Chooses the component count in `1..=max_a` by inner k-fold CV.
pub fn select_components(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    k_inner: usize,
    max_a: usize,
    seed: u64,
) -> Result<usize> {
    let split = kfold_split(x.nrows(), k_inner, seed)?;
    let curve = cv_curve(x, y, &split, max_a)?;
    Ok(argmin_first(&curve) + 1)
}

/// Out-of-fold predictions of a PLS model over a fixed split.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsCv {
    pub predictions: Array1<f64>,
    pub per_fold_rmse: Vec<f64>,
    pub rmsecv: f64,
}

pub fn pls_cv(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    split: &FoldSplit,
    rule: ComponentRule,
    seed: u64,
) -> Result<PlsCv> {
    check_split(x.nrows(), split)?;
    let mut predictions = Array1::zeros(x.nrows());
    let mut per_fold_rmse = Vec::with_capacity(split.k);
    let mut sse = 0.0;
    for (f, fold) in split.folds.iter().enumerate() {
        let xt = x.select(Axis(0), &fold.train);
        let yt = y.select(Axis(0), &fold.train);
        let model = fit_with_rule(xt.view(), yt.view(), rule, fold_model_seed(seed, f))
            .map_err(|e| Error::Fold { index: f, source: Box::new(e) })?;
        let pred = model.predict(x.select(Axis(0), &fold.validation).view())?;
        let mut fold_sse = 0.0;
        for (p, &i) in pred.iter().zip(&fold.validation) {
            predictions[i] = *p;
            let e = p - y[i];
            fold_sse += e * e;
        }
        sse += fold_sse;
        per_fold_rmse.push((fold_sse / fold.validation.len() as f64).sqrt());
    }
    Ok(PlsCv { predictions, per_fold_rmse, rmsecv: (sse / x.nrows() as f64).sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentedPls {
    pub segment_len: usize,
    /// Column range `[start, end)` of each segment.
    pub segments: Vec<(usize, usize)>,
    pub rmsecv: Vec<f64>,
    pub best: usize,
}

impl SegmentedPls {
    pub fn best_range(&self) -> (usize, usize) {
        self.segments[self.best]
    }
}

/// Cross-validates plain PLS on each contiguous block of `segment_len`
/// columns (the last block may be shorter) and picks the best block.
pub fn segmented_pls(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    segment_len: usize,
    k: usize,
    seed: u64,
    rule: ComponentRule,
) -> Result<SegmentedPls> {
    let d = x.ncols();
    if segment_len == 0 || segment_len > d {
        return Err(Error::invalid(format!("segment length must be in 1..={d}, got {segment_len}")));
    }
    let split = kfold_split(x.nrows(), k, seed)?;
    let segments: Vec<(usize, usize)> =
        (0..d).step_by(segment_len).map(|start| (start, (start + segment_len).min(d))).collect();
    let rmsecv = segments
        .iter()
        .map(|&(a, b)| pls_cv(x.slice(s![.., a..b]), y, &split, rule, seed).map(|r| r.rmsecv))
        .collect::<Result<Vec<_>>>()?;
    let best = argmin_first(&rmsecv);
    Ok(SegmentedPls { segment_len, segments, rmsecv, best })
}

/// Per-fold cross-product matrices of a fixed split, for scoring many
/// column subsets of the same data. [`GramFolds::curve`] runs the kernel
/// form of PLS1 on the selected rows and columns of the training-fold
/// `XᵀX` and `Xᵀy`; it gives the same curve as [`cv_curve`] on
/// `x.select(Axis(1), mask)` up to rounding, at `O(k²)` per component
/// instead of `O(n·k)`.
pub struct GramFolds {
    /// `x` centered on its full-data column means.
    xc: Array2<f64>,
    y: Array1<f64>,
    folds: Vec<FoldGram>,
}

struct FoldGram {
    validation: Vec<usize>,
    n_train: usize,
    /// Training-fold column means of `xc`.
    mean: Array1<f64>,
    y_mean: f64,
    /// Centered training `XᵀX`.
    xtx: Array2<f64>,
    /// Centered training `Xᵀy`.
    xty: Array1<f64>,
}

impl GramFolds {
    pub fn new(x: ArrayView2<f64>, y: ArrayView1<f64>, split: &FoldSplit) -> Result<Self> {
        check_split(x.nrows(), split)?;
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.len() });
        }
        let xc = &x - &x.mean_axis(Axis(0)).ok_or_else(|| Error::invalid("empty matrix"))?;
        let folds = split
            .folds
            .iter()
            .map(|fold| {
                let xt = xc.select(Axis(0), &fold.train);
                let yt = y.select(Axis(0), &fold.train);
                let mean = xt.mean_axis(Axis(0)).expect("non-empty training fold");
                let y_mean = yt.mean().expect("non-empty training fold");
                let centered = &xt - &mean;
                FoldGram {
                    validation: fold.validation.clone(),
                    n_train: fold.train.len(),
                    xty: centered.t().dot(&(&yt - y_mean)),
                    xtx: centered.t().dot(&centered),
                    mean,
                    y_mean,
                }
            })
            .collect();
        Ok(GramFolds { xc, y: y.to_owned(), folds })
    }

    /// Pooled RMSECV for `1..=max` components using only the columns in
    /// `mask`.
    pub fn curve(&self, mask: &[usize], max: usize) -> Result<Vec<f64>> {
        if max == 0 {
            return Err(Error::invalid("component search needs max >= 1"));
        }
        if let Some(&m) = mask.iter().find(|&&m| m >= self.xc.ncols()) {
            return Err(Error::DimensionMismatch { expected: m + 1, found: self.xc.ncols() });
        }
        let mut sse = vec![0.0; max];
        for fold in &self.folds {
            let c = fold.xtx.select(Axis(0), mask).select(Axis(1), mask);
            let xy = fold.xty.select(Axis(0), mask);
            let a_max = max.min(max_components(fold.n_train, mask.len()));
            let (rs, qs) = kernel_pls1(&c, &xy, a_max)?;
            let got = qs.len();
            let mu = fold.mean.select(Axis(0), mask);
            for &i in &fold.validation {
                let z = &self.xc.row(i).select(Axis(0), mask) - &mu;
                let mut pred = fold.y_mean;
                for (a, acc) in sse.iter_mut().enumerate() {
                    if a < got {
                        pred += qs[a] * z.dot(&rs.column(a));
                    }
                    let e = pred - self.y[i];
                    *acc += e * e;
                }
            }
        }
        let n = self.xc.nrows() as f64;
        Ok(sse.into_iter().map(|s| (s / n).sqrt()).collect())
    }
}

/// PLS1 from `C = XᵀX` and `s = Xᵀy` (both centered). Returns the rotation
/// vectors `R` (scores `T = XR`) and y-loadings; the `a`-component
/// coefficients are `R[:, ..a] q[..a]`. Stops early under the same rule as
/// [`pls_fit`].
fn kernel_pls1(c: &Array2<f64>, s0: &Array1<f64>, a_max: usize) -> Result<(Array2<f64>, Vec<f64>)> {
    let d = s0.len();
    let mut rs = Array2::zeros((d, a_max));
    let mut ps: Vec<Array1<f64>> = Vec::with_capacity(a_max);
    let mut qs = Vec::with_capacity(a_max);
    let mut s = s0.clone();
    let first = s0.dot(s0).sqrt();
    for a in 0..a_max {
        let norm = s.dot(&s).sqrt();
        if !(norm > DEFLATION_TOL * first) || norm == 0.0 {
            break;
        }
        let w = &s / norm;
        let mut r = w.clone();
        for (j, p) in ps.iter().enumerate() {
            r.scaled_add(-p.dot(&w), &rs.column(j));
        }
        let cr = c.dot(&r);
        let tt = r.dot(&cr);
        if !(tt > 0.0) {
            break;
        }
        let p = cr / tt;
        let q = s.dot(&r) / tt;
        s.scaled_add(-q * tt, &p);
        rs.column_mut(a).assign(&r);
        ps.push(p);
        qs.push(q);
    }
    if qs.is_empty() {
        return Err(Error::Degenerate("PLS: response has no covariance with the predictors".into()));
    }
    Ok((rs, qs))
}
