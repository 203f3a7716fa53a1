//! Chemometric regression workbench for near-infrared sugar prediction.
//!
//! The crate covers the whole modelling loop used for fruit-sugar regression
//! from absorbance spectra:
//!
//! * [`dataset`]: labelled spectra, CSV I/O, a Beer-Lambert style synthetic
//!   generator and k-fold splitting.
//! * [`preprocess`]: Savitzky-Golay, MSC, SNV, derivatives, Haar wavelet
//!   reduction, PCA and GA selection composed into fitted chains, plus the
//!   strategy-string grammar (`SG>MSC>SNV>WD(400)>GA(100)>MLP-CNN`).
//! * [`pls`]: NIPALS PLS1, component selection and segmented PLS.
//! * [`ga`]: fixed-size feature-subset genetic algorithm with PLS fitness.
//! * [`nn`]: from-scratch MLP / CNN / CNN-MLP / MLP-CNN regressors with exact
//!   reverse-mode gradients.
//! * [`anova`]: group-similarity analysis used to audit a dataset.
//! * [`metrics`]: RMSE, R², dataset STD and the Closeness ratio.
//! * [`evaluate`]: the cross-validation driver producing [`EvalReport`]s.

// `!(a < b)` is used deliberately so that NaN falls on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anova;
pub mod dataset;
mod error;
pub mod evaluate;
pub mod ga;
pub mod metrics;
pub mod nn;
pub mod pls;
pub mod preprocess;
pub mod rng;

pub use dataset::{FoldSplit, LabeledSample, SpectraDataset, SynthConfig};
pub use error::{Error, Result};
pub use evaluate::{cross_validate, cross_validate_with_split, CvOptions, EvalReport};
pub use preprocess::{parse_strategy, ModelKind, PreprocessStep, Strategy};
