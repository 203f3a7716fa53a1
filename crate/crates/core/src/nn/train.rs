use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{loss_and_grad, ModelArch, NetParams};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Plain full-batch gradient descent.
    Gd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 5000, learning_rate: 1e-3, optimizer: Optimizer::Gd, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        // zero is allowed: it freezes the initial parameters
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNet {
    pub params: NetParams,
    /// Training MSE before each update, plus the MSE of the final
    /// parameters (`epochs + 1` entries).
    pub loss_trace: Vec<f64>,
}

impl TrainedNet {
    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace is never empty")
    }
}

/// Glorot-initialised full-batch training on mean squared error.
pub fn train(arch: &ModelArch, x: ArrayView2<f64>, y: ArrayView1<f64>, config: &TrainConfig) -> Result<TrainedNet> {
    config.validate()?;
    let params = NetParams::glorot(arch, &mut rng::seeded(config.seed))?;
    train_from(params, x, y, config)
}

/// Continues training from given parameters.
pub fn train_from(
    mut params: NetParams,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    config: &TrainConfig,
) -> Result<TrainedNet> {
    config.validate()?;
    if x.nrows() == 0 {
        return Err(Error::invalid("no training samples"));
    }
    let np = params.len();
    let (mut m, mut v) = match config.optimizer {
        Optimizer::Gd => (Vec::new(), Vec::new()),
        Optimizer::Adam { .. } => (vec![0.0; np], vec![0.0; np]),
    };
    let mut trace = Vec::with_capacity(config.epochs + 1);
    let mut last_finite = f64::NAN;
    for epoch in 0..=config.epochs {
        let (loss, grad) = loss_and_grad(&params, x, y)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch, last_finite_loss: last_finite });
        }
        last_finite = loss;
        trace.push(loss);
        if epoch == config.epochs {
            break;
        }
        let lr = config.learning_rate;
        let p = params.as_flat_mut();
        match config.optimizer {
            Optimizer::Gd => {
                for (w, g) in p.iter_mut().zip(&grad) {
                    *w -= lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let t = (epoch + 1) as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for k in 0..np {
                    m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
                    v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
                    p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
                }
            }
        }
    }
    Ok(TrainedNet { params, loss_trace: trace })
}
