//! Cross-validation driver: fits a preprocessing chain and a model per fold
//! and pools the validation residuals.

use ndarray::{s, Array1, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{kfold_split, FoldSplit};
use crate::ga::GenerationRecord;
use crate::metrics::{closeness, r_squared, std_dev, PredictionSet, StdKind};
use crate::nn::{self, ArchKind, ModelArch, NetParams, TrainConfig};
use crate::pls::{fit_with_rule, segmented_pls, ComponentRule, PlsModel};
use crate::preprocess::{fit_chain, ChainOptions, FittedChain, ModelKind, Strategy};
use crate::rng::derive_seed;
use crate::{Error, Result, SpectraDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct NnOptions {
    pub train: TrainConfig,
    pub mlp_widths: Vec<usize>,
    pub conv_channels: Vec<usize>,
    pub head_width: usize,
    /// Standardize features and targets with training-set statistics.
    pub standardize: bool,
}

impl Default for NnOptions {
    fn default() -> Self {
        NnOptions {
            train: TrainConfig::default(),
            mlp_widths: nn::STANDARD_MLP_WIDTHS.to_vec(),
            conv_channels: nn::STANDARD_CONV_CHANNELS.to_vec(),
            head_width: 16,
            standardize: true,
        }
    }
}

impl NnOptions {
    pub fn arch(&self, kind: ArchKind, input_dim: usize) -> ModelArch {
        ModelArch::standard(kind, input_dim)
            .with_widths(&self.mlp_widths, &self.conv_channels)
            .with_head_width(self.head_width)
    }
}

#[derive(Debug, Clone)]
pub struct CvOptions {
    pub chain: ChainOptions,
    pub pls_rule: ComponentRule,
    /// Folds used to rank segments for `SEGPLS(n)`.
    pub segment_folds: usize,
    pub nn: NnOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            chain: ChainOptions::default(),
            pls_rule: ComponentRule::default(),
            segment_folds: 5,
            nn: NnOptions::default(),
        }
    }
}

fn arch_kind(model: ModelKind) -> Option<ArchKind> {
    match model {
        ModelKind::Mlp => Some(ArchKind::Mlp),
        ModelKind::Cnn => Some(ArchKind::Cnn),
        ModelKind::CnnMlp => Some(ArchKind::CnnMlp),
        ModelKind::MlpCnn => Some(ArchKind::MlpCnn),
        ModelKind::Pls | ModelKind::SegPls(_) => None,
    }
}

/// A network plus the affine scaling of its inputs and output.
#[derive(Debug, Clone, PartialEq)]
pub struct NnRegressor {
    pub params: NetParams,
    pub x_mean: Array1<f64>,
    pub x_scale: Array1<f64>,
    pub y_mean: f64,
    pub y_scale: f64,
    /// Training MSE in target units, `epochs + 1` entries.
    pub loss_trace: Vec<f64>,
}

impl NnRegressor {
    pub fn fit(arch: &ModelArch, x: ArrayView2<f64>, y: ArrayView1<f64>, opts: &NnOptions, seed: u64) -> Result<Self> {
        let d = x.ncols();
        let (x_mean, x_scale, y_mean, y_scale) = if opts.standardize {
            let mean = x.mean_axis(Axis(0)).ok_or_else(|| Error::invalid("no training samples"))?;
            let scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
            let ym = y.mean().unwrap_or(0.0);
            let ys = y.std(0.0);
            (mean, scale, ym, if ys > 1e-12 { ys } else { 1.0 })
        } else {
            (Array1::zeros(d), Array1::ones(d), 0.0, 1.0)
        };
        let xs = (&x - &x_mean) / &x_scale;
        let ys = y.mapv(|v| (v - y_mean) / y_scale);
        let config = TrainConfig { seed, ..opts.train.clone() };
        let trained = nn::train(arch, xs.view(), ys.view(), &config)?;
        let loss_trace = trained.loss_trace.iter().map(|l| l * y_scale * y_scale).collect();
        Ok(NnRegressor { params: trained.params, x_mean, x_scale, y_mean, y_scale, loss_trace })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.x_mean.len() {
            return Err(Error::DimensionMismatch { expected: self.x_mean.len(), found: x.ncols() });
        }
        let xs = (&x - &self.x_mean) / &self.x_scale;
        Ok(nn::predict(&self.params, xs.view())?.mapv(|v| v * self.y_scale + self.y_mean))
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    Pls(PlsModel),
    /// PLS restricted to the column range `[start, end)`.
    SegPls { start: usize, end: usize, model: PlsModel },
    Nn(NnRegressor),
}

impl Model {
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        match self {
            Model::Pls(m) => m.predict(x),
            Model::SegPls { start, end, model } => {
                if x.ncols() < *end {
                    return Err(Error::DimensionMismatch { expected: *end, found: x.ncols() });
                }
                model.predict(x.slice(s![.., *start..*end]))
            }
            Model::Nn(m) => m.predict(x),
        }
    }
}

/// A preprocessing chain and model fitted on one training set.
#[derive(Debug, Clone)]
pub struct FittedStrategy {
    pub chain: FittedChain,
    pub model: Model,
}

impl FittedStrategy {
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.model.predict(self.chain.transform(x)?.view())
    }
}

/// Fits `strategy` on `(x, y)`. Sub-streams of `seed`: 1 for PLS component
/// selection, 2 for GA steps, 3 for network initialization.
pub fn fit_strategy(
    strategy: &Strategy,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    opts: &CvOptions,
    seed: u64,
) -> Result<FittedStrategy> {
    let mut chain_opts = opts.chain.clone();
    chain_opts.ga.seed = derive_seed(seed, 2);
    let (chain, features) = fit_chain(&strategy.steps, x, y, &chain_opts)?;
    let model_seed = derive_seed(seed, 1);
    let model = match strategy.model {
        ModelKind::Pls => Model::Pls(fit_with_rule(features.view(), y, opts.pls_rule, model_seed)?),
        ModelKind::SegPls(len) => {
            let k = opts.segment_folds.min(features.nrows());
            let seg = segmented_pls(features.view(), y, len, k, model_seed, opts.pls_rule)?;
            let (start, end) = seg.best_range();
            let model = fit_with_rule(features.slice(s![.., start..end]), y, opts.pls_rule, model_seed)?;
            Model::SegPls { start, end, model }
        }
        kind => {
            let arch = opts.nn.arch(arch_kind(kind).expect("network model"), features.ncols());
            Model::Nn(NnRegressor::fit(&arch, features.view(), y, &opts.nn, derive_seed(seed, 3))?)
        }
    };
    Ok(FittedStrategy { chain, model })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub strategy: String,
    pub folds: usize,
    pub seed: u64,
    pub per_fold_rmse: Vec<f64>,
    pub rmsecv: f64,
    /// Mean over folds whose validation targets have non-zero variance.
    pub r2_mean: f64,
    /// Population std of all sugar values in the dataset.
    pub std: f64,
    pub closeness_pct: f64,
    /// Per fold, per GA step: the generation trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ga_trace: Option<Vec<Vec<GenerationRecord>>>,
    /// Per fold: the training loss trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nn_loss_trace: Option<Vec<Vec<f64>>>,
    /// Out-of-fold prediction of every sample.
    #[serde(skip)]
    pub predictions: Vec<f64>,
}

struct FoldOutcome {
    validation: Vec<usize>,
    predictions: Array1<f64>,
    ga: Vec<GenerationRecord>,
    ga_runs: usize,
    loss: Option<Vec<f64>>,
}

fn run_fold(strategy: &Strategy, x: ArrayView2<f64>, y: ArrayView1<f64>, split: &FoldSplit, f: usize, opts: &CvOptions) -> Result<FoldOutcome> {
    let fold = &split.folds[f];
    let xt = x.select(Axis(0), &fold.train);
    let yt = y.select(Axis(0), &fold.train);
    let fitted = fit_strategy(strategy, xt.view(), yt.view(), opts, derive_seed(split.seed, f as u64))?;
    let predictions = fitted.predict(x.select(Axis(0), &fold.validation).view())?;
    let mut ga = Vec::new();
    let mut ga_runs = 0;
    for result in fitted.chain.ga_results() {
        ga.extend(result.trace.iter().cloned());
        ga_runs += 1;
    }
    let loss = match &fitted.model {
        Model::Nn(m) => Some(m.loss_trace.clone()),
        _ => None,
    };
    Ok(FoldOutcome { validation: fold.validation.clone(), predictions, ga, ga_runs, loss })
}

/// k-fold cross-validation with a split derived from `seed`.
pub fn cross_validate(strategy: &Strategy, dataset: &SpectraDataset, k: usize, seed: u64, opts: &CvOptions) -> Result<EvalReport> {
    let split = kfold_split(dataset.len(), k, seed)?;
    cross_validate_with_split(strategy, dataset, &split, opts)
}

/// Cross-validation over a given split; every fold fits the chain and model
/// on its training rows only.
pub fn cross_validate_with_split(
    strategy: &Strategy,
    dataset: &SpectraDataset,
    split: &FoldSplit,
    opts: &CvOptions,
) -> Result<EvalReport> {
    let n = dataset.len();
    if split.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: split.n });
    }
    let (x, y) = (dataset.spectra().view(), dataset.sugar().view());
    let outcomes: Vec<FoldOutcome> = (0..split.k)
        .into_par_iter()
        .map(|f| run_fold(strategy, x, y, split, f, opts).map_err(|e| Error::Fold { index: f, source: Box::new(e) }))
        .collect::<Result<_>>()?;

    let mut predictions = vec![0.0; n];
    let mut per_fold_rmse = Vec::with_capacity(split.k);
    let mut r2s = Vec::new();
    let mut sse = 0.0;
    for o in &outcomes {
        let truth: Vec<f64> = o.validation.iter().map(|&i| y[i]).collect();
        let set = PredictionSet::new(o.predictions.to_vec(), truth)?;
        sse += set.sse();
        per_fold_rmse.push((set.sse() / set.len() as f64).sqrt());
        if let Ok(r2) = r_squared(&set) {
            r2s.push(r2);
        }
        for (&i, &p) in o.validation.iter().zip(&o.predictions) {
            predictions[i] = p;
        }
    }
    let rmsecv = (sse / n as f64).sqrt();
    let std = std_dev(y.as_slice().expect("contiguous labels"), StdKind::Population)?;
    let r2_mean = if r2s.is_empty() { f64::NAN } else { r2s.iter().sum::<f64>() / r2s.len() as f64 };
    let has_ga = outcomes.iter().any(|o| o.ga_runs > 0);
    let has_nn = outcomes.iter().any(|o| o.loss.is_some());
    Ok(EvalReport {
        strategy: strategy.to_string(),
        folds: split.k,
        seed: split.seed,
        per_fold_rmse,
        rmsecv,
        r2_mean,
        std,
        closeness_pct: closeness(rmsecv, std)?,
        ga_trace: has_ga.then(|| outcomes.iter().map(|o| o.ga.clone()).collect()),
        nn_loss_trace: has_nn.then(|| outcomes.iter().map(|o| o.loss.clone().unwrap_or_default()).collect()),
        predictions,
    })
}
