//! Labelled spectra, CSV persistence, synthetic generation and fold splitting.

mod csv;
mod folds;
mod synth;

pub use self::csv::{load_csv, save_csv, write_csv};
pub use folds::{kfold_split, Fold, FoldSplit};
pub use synth::{synthesize, Peak, SynthConfig};

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::Serialize;

use crate::metrics::{std_dev, StdKind};
use crate::{Error, Result};

/// One fruit: an absorbance spectrum and its refractometer sugar reading (°Brix).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub id: String,
    pub spectrum: Vec<f64>,
    pub sugar: f64,
}

/// A non-empty set of equally sized spectra with sugar labels.
///
/// Spectra are stored row-wise in a single `n × dim` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraDataset {
    ids: Vec<String>,
    spectra: Array2<f64>,
    sugar: Array1<f64>,
}

impl SpectraDataset {
    pub fn new(ids: Vec<String>, spectra: Array2<f64>, sugar: Array1<f64>) -> Result<Self> {
        let (n, dim) = spectra.dim();
        if n == 0 {
            return Err(Error::invalid("dataset must contain at least one sample"));
        }
        if dim == 0 {
            return Err(Error::invalid("spectra must have at least one wavelength point"));
        }
        if ids.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: ids.len() });
        }
        if sugar.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: sugar.len() });
        }
        if let Some((i, _)) = sugar.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid(format!(
                "sample {} has non-positive or non-finite sugar value {}",
                ids[i], sugar[i]
            )));
        }
        if let Some(((r, c), v)) = spectra.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "sample {} has non-finite absorbance {v} at point {c}",
                ids[r]
            )));
        }
        Ok(SpectraDataset { ids, spectra, sugar })
    }

    pub fn from_samples(samples: Vec<LabeledSample>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::invalid("dataset must contain at least one sample"));
        };
        let dim = first.spectrum.len();
        let n = samples.len();
        let mut spectra = Array2::zeros((n, dim));
        let mut sugar = Array1::zeros(n);
        let mut ids = Vec::with_capacity(n);
        for (i, s) in samples.into_iter().enumerate() {
            if s.spectrum.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.spectrum.len() });
            }
            spectra.row_mut(i).assign(&ArrayView1::from(&s.spectrum));
            sugar[i] = s.sugar;
            ids.push(s.id);
        }
        Self::new(ids, spectra, sugar)
    }

    pub fn len(&self) -> usize {
        self.spectra.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.spectra.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn spectra(&self) -> &Array2<f64> {
        &self.spectra
    }

    pub fn sugar(&self) -> &Array1<f64> {
        &self.sugar
    }

    pub fn sample(&self, i: usize) -> LabeledSample {
        LabeledSample {
            id: self.ids[i].clone(),
            spectrum: self.spectra.row(i).to_vec(),
            sugar: self.sugar[i],
        }
    }

    /// Rows `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::invalid(format!("sample index {bad} out of range")));
        }
        Self::new(
            indices.iter().map(|&i| self.ids[i].clone()).collect(),
            self.spectra.select(Axis(0), indices),
            self.sugar.select(Axis(0), indices),
        )
    }
}

/// Descriptive statistics of the sugar labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub distinct: usize,
}

/// Sugar statistics with the population (1/n) standard deviation.
pub fn dataset_stats(dataset: &SpectraDataset) -> DatasetStats {
    dataset_stats_with(dataset, StdKind::Population)
}

pub fn dataset_stats_with(dataset: &SpectraDataset, kind: StdKind) -> DatasetStats {
    let y = dataset.sugar().as_slice().expect("labels are contiguous");
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // exact equality: labels are one-decimal refractometer readings
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    DatasetStats {
        n,
        mean,
        std: std_dev(y, kind).unwrap_or(0.0),
        min,
        max,
        distinct: sorted.len(),
    }
}
