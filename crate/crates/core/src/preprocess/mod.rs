//! Spectral preprocessing and fitted preprocessing chains.
//!
//! Per-spectrum transforms (SG, SNV, derivatives, wavelet reduction) need no
//! fitting. MSC, PCA and GA selection are fitted on the training spectra only
//! and then applied unchanged to any other set, so validation data never
//! influences a fitted chain.

mod derivative;
mod pca;
mod scatter;
mod sg;
mod strategy;
mod wavelet;

pub use derivative::derivative;
pub use pca::{pca_fit, PcaModel};
pub use scatter::{msc_apply, msc_fit, snv};
pub use sg::{sg_smooth, SavitzkyGolay};
pub use strategy::{parse_strategy, ModelKind, Strategy};
pub use wavelet::{haar_analysis, haar_levels, haar_step, wavelet_decompose};

use std::fmt;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::ga::{self, GaConfig, GaResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreprocessStep {
    /// Savitzky-Golay smoothing (window and order from [`ChainOptions`]).
    Sg,
    Msc,
    Snv,
    Derivative1,
    Derivative2,
    /// Projection onto the leading principal components.
    Pca(usize),
    /// Haar approximation coefficients, reducing to the given dimension.
    Wavelet(usize),
    /// GA-PLS selection of the given number of features.
    Ga(usize),
}

impl fmt::Display for PreprocessStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreprocessStep::Sg => f.write_str("SG"),
            PreprocessStep::Msc => f.write_str("MSC"),
            PreprocessStep::Snv => f.write_str("SNV"),
            PreprocessStep::Derivative1 => f.write_str("D1"),
            PreprocessStep::Derivative2 => f.write_str("D2"),
            PreprocessStep::Pca(k) => write!(f, "PCA({k})"),
            PreprocessStep::Wavelet(k) => write!(f, "WD({k})"),
            PreprocessStep::Ga(k) => write!(f, "GA({k})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainOptions {
    pub sg_window: usize,
    pub sg_polyorder: usize,
    /// Template for GA steps; `k_select` is taken from the step.
    pub ga: GaConfig,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions { sg_window: 5, sg_polyorder: 2, ga: GaConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub enum FittedStep {
    Sg(SavitzkyGolay),
    Msc { reference: Vec<f64> },
    Snv,
    Derivative(u8),
    Wavelet(usize),
    Pca(PcaModel),
    Ga { selected: Vec<usize>, result: GaResult },
}

impl FittedStep {
    fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        match self {
            FittedStep::Sg(filter) => map_rows(x, |r| filter.smooth(r)),
            FittedStep::Msc { reference } => map_rows(x, |r| msc_apply(r, reference)),
            FittedStep::Snv => map_rows(x, snv),
            FittedStep::Derivative(order) => map_rows(x, |r| derivative(r, *order)),
            FittedStep::Wavelet(target) => map_rows(x, |r| wavelet_decompose(r, *target)),
            FittedStep::Pca(model) => model.transform(x),
            FittedStep::Ga { selected, .. } => {
                if let Some(&max) = selected.last() {
                    if max >= x.ncols() {
                        return Err(Error::DimensionMismatch { expected: max + 1, found: x.ncols() });
                    }
                }
                Ok(x.select(Axis(1), selected))
            }
        }
    }
}

/// Applies a per-spectrum transform to every row.
fn map_rows<F>(x: ArrayView2<f64>, f: F) -> Result<Array2<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let rows: Vec<Vec<f64>> = (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let row = x.row(i);
            match row.as_slice() {
                Some(s) => f(s),
                None => f(&row.to_vec()),
            }
        })
        .collect::<Result<_>>()?;
    let width = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((x.nrows(), width), flat).expect("uniform row width"))
}

/// A chain whose data-dependent steps have been fitted on a training set.
#[derive(Debug, Clone)]
pub struct FittedChain {
    steps: Vec<(PreprocessStep, FittedStep)>,
    input_dim: usize,
    output_dim: usize,
}

impl FittedChain {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn steps(&self) -> impl Iterator<Item = &FittedStep> {
        self.steps.iter().map(|(_, f)| f)
    }

    /// GA runs performed while fitting, in chain order.
    pub fn ga_results(&self) -> impl Iterator<Item = &GaResult> {
        self.steps().filter_map(|s| match s {
            FittedStep::Ga { result, .. } => Some(result),
            _ => None,
        })
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: x.ncols() });
        }
        let mut current = x.to_owned();
        for (index, (step, fitted)) in self.steps.iter().enumerate() {
            current = fitted.apply(current.view()).map_err(|e| annotate(index, step, e))?;
        }
        Ok(current)
    }
}

fn annotate(index: usize, step: &PreprocessStep, source: Error) -> Error {
    Error::Step { index, step: step.to_string(), source: Box::new(source) }
}

fn fit_step(
    step: PreprocessStep,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    opts: &ChainOptions,
) -> Result<FittedStep> {
    Ok(match step {
        PreprocessStep::Sg => FittedStep::Sg(SavitzkyGolay::new(opts.sg_window, opts.sg_polyorder)?),
        PreprocessStep::Msc => FittedStep::Msc { reference: msc_fit(x)? },
        PreprocessStep::Snv => FittedStep::Snv,
        PreprocessStep::Derivative1 => FittedStep::Derivative(1),
        PreprocessStep::Derivative2 => FittedStep::Derivative(2),
        PreprocessStep::Wavelet(target) => {
            haar_levels(x.ncols(), target)?;
            FittedStep::Wavelet(target)
        }
        PreprocessStep::Pca(k) => FittedStep::Pca(pca_fit(x, k)?),
        PreprocessStep::Ga(k) => {
            if k > x.ncols() {
                return Err(Error::invalid(format!(
                    "GA({k}) needs at least {k} input features, found {}",
                    x.ncols()
                )));
            }
            let config = GaConfig { k_select: k, ..opts.ga.clone() };
            let result = ga::ga_run(x, y, &config)?;
            FittedStep::Ga { selected: result.best_mask.clone(), result }
        }
    })
}

/// Fits `steps` in order on the training set and returns the fitted chain
/// with the transformed training matrix.
pub fn fit_chain(
    steps: &[PreprocessStep],
    train_x: ArrayView2<f64>,
    train_y: ArrayView1<f64>,
    opts: &ChainOptions,
) -> Result<(FittedChain, Array2<f64>)> {
    if train_x.nrows() != train_y.len() {
        return Err(Error::DimensionMismatch { expected: train_x.nrows(), found: train_y.len() });
    }
    let mut current = train_x.to_owned();
    let mut fitted = Vec::with_capacity(steps.len());
    for (index, &step) in steps.iter().enumerate() {
        let f = fit_step(step, current.view(), train_y, opts).map_err(|e| annotate(index, &step, e))?;
        current = f.apply(current.view()).map_err(|e| annotate(index, &step, e))?;
        fitted.push((step, f));
    }
    let chain = FittedChain { steps: fitted, input_dim: train_x.ncols(), output_dim: current.ncols() };
    Ok((chain, current))
}

/// Fits on `train_x` and transforms both sets.
pub fn chain_fit_apply(
    steps: &[PreprocessStep],
    train_x: ArrayView2<f64>,
    train_y: ArrayView1<f64>,
    apply_x: ArrayView2<f64>,
    opts: &ChainOptions,
) -> Result<(FittedChain, Array2<f64>, Array2<f64>)> {
    let (chain, train) = fit_chain(steps, train_x, train_y, opts)?;
    let applied = chain.transform(apply_x)?;
    Ok((chain, train, applied))
}
