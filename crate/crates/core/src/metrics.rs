//! Regression error metrics and the Closeness ratio.
//!
//! Closeness divides the cross-validated RMSE by the standard deviation of
//! the whole dataset's labels, which makes results comparable across fruits
//! whose sugar ranges differ.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StdKind {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

/// How the squared residuals are aggregated inside the square root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RmseForm {
    /// √(Σe²/n).
    #[default]
    Mean,
    /// √(Σe²), the formula exactly as printed (no 1/n). Kept for audits.
    LiteralSum,
}

/// Matched predicted/true sugar values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    predicted: Vec<f64>,
    truth: Vec<f64>,
}

impl PredictionSet {
    pub fn new(predicted: Vec<f64>, truth: Vec<f64>) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::DimensionMismatch { expected: truth.len(), found: predicted.len() });
        }
        if predicted.is_empty() {
            return Err(Error::invalid("prediction set is empty"));
        }
        if predicted.iter().chain(&truth).any(|v| !v.is_finite()) {
            return Err(Error::invalid("prediction set contains non-finite values"));
        }
        Ok(PredictionSet { predicted, truth })
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn sse(&self) -> f64 {
        self.predicted.iter().zip(&self.truth).map(|(p, t)| (p - t) * (p - t)).sum()
    }
}

pub fn rmse(set: &PredictionSet) -> f64 {
    rmse_with(set, RmseForm::Mean)
}

pub fn rmse_with(set: &PredictionSet, form: RmseForm) -> f64 {
    match form {
        RmseForm::Mean => (set.sse() / set.len() as f64).sqrt(),
        RmseForm::LiteralSum => set.sse().sqrt(),
    }
}

/// 1 - SSE/SST about the truth mean; negative when worse than the mean.
pub fn r_squared(set: &PredictionSet) -> Result<f64> {
    let t = set.truth();
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    let sst: f64 = t.iter().map(|v| (v - mean) * (v - mean)).sum();
    if sst <= 0.0 {
        return Err(Error::Degenerate("R² undefined: truth values have zero variance".into()));
    }
    Ok(1.0 - set.sse() / sst)
}

pub fn std_dev(values: &[f64], kind: StdKind) -> Result<f64> {
    let n = values.len();
    let denom = match kind {
        StdKind::Population if n >= 1 => n as f64,
        StdKind::Sample if n >= 2 => (n - 1) as f64,
        _ => return Err(Error::invalid(format!("too few values ({n}) for {kind:?} std"))),
    };
    let mean = values.iter().sum::<f64>() / n as f64;
    Ok((values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / denom).sqrt())
}

/// Closeness in percent: `100 · rmsecv / std`.
pub fn closeness(rmsecv: f64, std: f64) -> Result<f64> {
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::invalid(format!("closeness needs a positive dataset std, got {std}")));
    }
    if !(rmsecv >= 0.0) {
        return Err(Error::invalid(format!("rmsecv must be non-negative, got {rmsecv}")));
    }
    Ok(100.0 * rmsecv / std)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosenessScore {
    pub rmsecv: f64,
    pub std: f64,
    pub closeness_pct: f64,
}

impl ClosenessScore {
    pub fn new(rmsecv: f64, std: f64) -> Result<Self> {
        Ok(ClosenessScore { rmsecv, std, closeness_pct: closeness(rmsecv, std)? })
    }
}
