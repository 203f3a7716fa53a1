//! Dense / convolutional regressors trained by full-batch gradient descent.
//!
//! Four topologies are supported:
//!
//! * `Mlp`: dense+ReLU stack, then a linear scalar head.
//! * `Cnn`: the input vector is wrapped row-major into a `k×k` map, passed
//!   through "same"-padded conv+ReLU layers and reduced to one scalar by a
//!   kernel spanning the whole map.
//! * `CnnMlp`: the conv stack is flattened into a dense+ReLU layer of
//!   `head_width` units and a linear scalar head.
//! * `MlpCnn`: the dense stack output `v` is turned into the map `v vᵀ`
//!   (self-correlation) and fed to the conv stack with the full-extent head.
//!
//! Parameters live in a single flat vector ([`NetParams`]); each layer owns a
//! contiguous block of weights followed by its biases.

mod blob;
mod net;
mod train;

pub use blob::{load_params, params_from_bytes, params_to_bytes, save_params};
pub use net::{forward, loss_and_grad, predict, relu_margin};
pub use train::{train, train_from, Optimizer, TrainConfig, TrainedNet};

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ArchKind {
    Mlp,
    Cnn,
    CnnMlp,
    MlpCnn,
}

impl ArchKind {
    pub fn uses_mlp(self) -> bool {
        matches!(self, ArchKind::Mlp | ArchKind::MlpCnn)
    }

    pub fn uses_conv(self) -> bool {
        !matches!(self, ArchKind::Mlp)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelArch {
    pub kind: ArchKind,
    pub input_dim: usize,
    pub mlp_widths: Vec<usize>,
    pub conv_channels: Vec<usize>,
    /// `(height, width)` of each conv kernel.
    pub conv_kernels: Vec<(usize, usize)>,
    /// Hidden width of the `CnnMlp` head.
    pub head_width: usize,
}

pub const STANDARD_MLP_WIDTHS: [usize; 6] = [512, 256, 128, 64, 32, 16];
pub const STANDARD_CONV_CHANNELS: [usize; 4] = [64, 64, 128, 128];
pub const STANDARD_CONV_KERNELS: [(usize, usize); 4] = [(3, 1), (1, 3), (3, 1), (1, 3)];

impl ModelArch {
    /// Full-size topology: six dense layers 512..16 and four conv layers
    /// with 64, 64, 128, 128 channels.
    pub fn standard(kind: ArchKind, input_dim: usize) -> Self {
        ModelArch {
            kind,
            input_dim,
            mlp_widths: STANDARD_MLP_WIDTHS.to_vec(),
            conv_channels: STANDARD_CONV_CHANNELS.to_vec(),
            conv_kernels: STANDARD_CONV_KERNELS.to_vec(),
            head_width: 16,
        }
    }

    /// Same topology with custom widths.
    pub fn with_widths(mut self, mlp_widths: &[usize], conv_channels: &[usize]) -> Self {
        self.mlp_widths = mlp_widths.to_vec();
        self.conv_channels = conv_channels.to_vec();
        self.conv_kernels = (0..conv_channels.len()).map(|i| STANDARD_CONV_KERNELS[i % 4]).collect();
        self
    }

    pub fn with_head_width(mut self, head_width: usize) -> Self {
        self.head_width = head_width;
        self
    }

    /// Side of the square map entering the conv stack.
    pub fn map_side(&self) -> Option<usize> {
        match self.kind {
            ArchKind::Mlp => None,
            ArchKind::MlpCnn => self.mlp_widths.last().copied(),
            ArchKind::Cnn | ArchKind::CnnMlp => exact_sqrt(self.input_dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::invalid("network input dimension must be positive"));
        }
        if self.kind.uses_mlp() && (self.mlp_widths.is_empty() || self.mlp_widths.contains(&0)) {
            return Err(Error::invalid("dense stack needs at least one positive width"));
        }
        if self.kind.uses_conv() {
            if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
                return Err(Error::invalid("conv stack needs at least one positive channel count"));
            }
            if self.conv_kernels.len() != self.conv_channels.len()
                || self.conv_kernels.iter().any(|&(h, w)| h == 0 || w == 0)
            {
                return Err(Error::invalid("one positive kernel shape per conv layer required"));
            }
            if self.map_side().is_none() {
                return Err(Error::invalid(format!(
                    "{} features cannot be wrapped into a square matrix",
                    self.input_dim
                )));
            }
        }
        if self.kind == ArchKind::CnnMlp && self.head_width == 0 {
            return Err(Error::invalid("head width must be positive"));
        }
        Ok(())
    }

    pub(crate) fn layers(&self) -> Vec<Layer> {
        let mut layers = Vec::new();
        let mut width = self.input_dim;
        if self.kind.uses_mlp() {
            for &w in &self.mlp_widths {
                layers.push(Layer::Dense { input: width, output: w, relu: true });
                width = w;
            }
        }
        match self.kind {
            ArchKind::Mlp => {
                layers.push(Layer::Dense { input: width, output: 1, relu: false });
                return layers;
            }
            ArchKind::MlpCnn => layers.push(Layer::SelfCorrelation { n: width }),
            ArchKind::Cnn | ArchKind::CnnMlp => {}
        }
        let side = self.map_side().unwrap_or(0);
        let mut cin = 1;
        for (&cout, &(kh, kw)) in self.conv_channels.iter().zip(&self.conv_kernels) {
            layers.push(Layer::Conv { cin, cout, side, kh, kw });
            cin = cout;
        }
        let flat = cin * side * side;
        if self.kind == ArchKind::CnnMlp {
            layers.push(Layer::Dense { input: flat, output: self.head_width, relu: true });
            layers.push(Layer::Dense { input: self.head_width, output: 1, relu: false });
        } else {
            layers.push(Layer::Dense { input: flat, output: 1, relu: false });
        }
        layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers().len()
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(Layer::param_count).sum()
    }
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n && n > 0).then_some(r)
}

/// One network stage. Wrapping and flattening are layout no-ops: maps are
/// stored channel-major, rows contiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Layer {
    Dense { input: usize, output: usize, relu: bool },
    SelfCorrelation { n: usize },
    /// Same-padded convolution over `side×side` maps, followed by ReLU.
    Conv { cin: usize, cout: usize, side: usize, kh: usize, kw: usize },
}

impl Layer {
    pub(crate) fn weight_count(&self) -> usize {
        match *self {
            Layer::Dense { input, output, .. } => input * output,
            Layer::SelfCorrelation { .. } => 0,
            Layer::Conv { cin, cout, kh, kw, .. } => cout * cin * kh * kw,
        }
    }

    pub(crate) fn bias_count(&self) -> usize {
        match *self {
            Layer::Dense { output, .. } => output,
            Layer::SelfCorrelation { .. } => 0,
            Layer::Conv { cout, .. } => cout,
        }
    }

    pub(crate) fn param_count(&self) -> usize {
        self.weight_count() + self.bias_count()
    }

    #[cfg(test)]
    pub(crate) fn output_len(&self) -> usize {
        match *self {
            Layer::Dense { output, .. } => output,
            Layer::SelfCorrelation { n } => n * n,
            Layer::Conv { cout, side, .. } => cout * side * side,
        }
    }

    fn fans(&self) -> (usize, usize) {
        match *self {
            Layer::Dense { input, output, .. } => (input, output),
            Layer::SelfCorrelation { .. } => (0, 0),
            Layer::Conv { cin, cout, kh, kw, .. } => (cin * kh * kw, cout * kh * kw),
        }
    }
}

/// Weights and biases of one layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBlock<'a> {
    pub weights: &'a [f64],
    pub biases: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    arch: ModelArch,
    values: Vec<f64>,
}

impl NetParams {
    pub fn zeros(arch: &ModelArch) -> Result<Self> {
        arch.validate()?;
        Ok(NetParams { arch: arch.clone(), values: vec![0.0; arch.param_count()] })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(arch: &ModelArch, rng: &mut impl Rng) -> Result<Self> {
        let mut params = Self::zeros(arch)?;
        let mut offset = 0;
        for layer in arch.layers() {
            let (fan_in, fan_out) = layer.fans();
            let nw = layer.weight_count();
            if nw > 0 {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for w in &mut params.values[offset..offset + nw] {
                    *w = rng.random_range(-limit..limit);
                }
            }
            offset += layer.param_count();
        }
        Ok(params)
    }

    pub fn from_flat(arch: &ModelArch, values: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        let expected = arch.param_count();
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: values.len() });
        }
        Ok(NetParams { arch: arch.clone(), values })
    }

    pub fn arch(&self) -> &ModelArch {
        &self.arch
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Per-layer views, in forward order; parameter-free layers yield empty
    /// blocks.
    pub fn blocks(&self) -> Vec<ParamBlock<'_>> {
        let mut rest = self.values.as_slice();
        self.arch
            .layers()
            .iter()
            .map(|l| {
                let (w, tail) = rest.split_at(l.weight_count());
                let (b, tail) = tail.split_at(l.bias_count());
                rest = tail;
                ParamBlock { weights: w, biases: b }
            })
            .collect()
    }
}

/// `M[i][j] = v[i]·v[j]`.
pub fn self_correlation(v: ArrayView1<f64>) -> Array2<f64> {
    let n = v.len();
    Array2::from_shape_fn((n, n), |(i, j)| v[i] * v[j])
}

/// Row-major reshape of a `side²`-vector.
pub fn wrap_to_matrix(v: ArrayView1<f64>, side: usize) -> Result<Array2<f64>> {
    if v.len() != side * side {
        return Err(Error::DimensionMismatch { expected: side * side, found: v.len() });
    }
    Ok(Array2::from_shape_fn((side, side), |(i, j)| v[i * side + j]))
}
