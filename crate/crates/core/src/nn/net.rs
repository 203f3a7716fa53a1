use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;

use super::{Layer, NetParams};
use crate::{Error, Result};

/// Rows per gradient chunk. Chunks are reduced in index order, so the
/// summation order does not depend on thread scheduling.
const CHUNK: usize = 16;

fn same_pad(k: usize) -> usize {
    (k - 1) / 2
}

/// Valid output index range `i` such that `i + a - pad` stays inside `0..side`.
#[inline]
fn span(a: usize, pad: usize, side: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(a);
    let hi = (side + pad).saturating_sub(a).min(side);
    (lo, hi.max(lo))
}

fn layer_forward(layer: &Layer, p: &[f64], input: &[f64], out: &mut Vec<f64>) {
    layer_forward_impl(layer, p, input, out, true)
}

fn layer_forward_impl(layer: &Layer, p: &[f64], input: &[f64], out: &mut Vec<f64>, activate: bool) {
    out.clear();
    match *layer {
        Layer::Dense { input: ni, output: no, relu } => {
            let (w, b) = p.split_at(ni * no);
            out.extend((0..no).map(|o| {
                let row = &w[o * ni..(o + 1) * ni];
                let z = b[o] + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>();
                if relu && activate { z.max(0.0) } else { z }
            }));
        }
        Layer::SelfCorrelation { n } => {
            out.extend((0..n * n).map(|k| input[k / n] * input[k % n]));
        }
        Layer::Conv { cin, cout, side, kh, kw } => {
            let area = side * side;
            let (w, b) = p.split_at(cout * cin * kh * kw);
            out.resize(cout * area, 0.0);
            let (ph, pw) = (same_pad(kh), same_pad(kw));
            for co in 0..cout {
                let dst = &mut out[co * area..(co + 1) * area];
                dst.fill(b[co]);
                for ci in 0..cin {
                    let src = &input[ci * area..(ci + 1) * area];
                    for a in 0..kh {
                        let (i0, i1) = span(a, ph, side);
                        for c in 0..kw {
                            let wv = w[((co * cin + ci) * kh + a) * kw + c];
                            let (j0, j1) = span(c, pw, side);
                            for i in i0..i1 {
                                let si = (i + a - ph) * side;
                                let d = &mut dst[i * side + j0..i * side + j1];
                                let s = &src[si + j0 + c - pw..si + j1 + c - pw];
                                for (dv, sv) in d.iter_mut().zip(s) {
                                    *dv += wv * sv;
                                }
                            }
                        }
                    }
                }
                if activate {
                    for v in dst.iter_mut() {
                        *v = v.max(0.0);
                    }
                }
            }
        }
    }
}

/// Backpropagates `grad_out` (gradient w.r.t. the layer's post-activation
/// output) through one layer, accumulating parameter gradients into `g` and
/// writing the input gradient into `grad_in`.
fn layer_backward(
    layer: &Layer,
    p: &[f64],
    g: &mut [f64],
    input: &[f64],
    output: &[f64],
    grad_out: &mut [f64],
    grad_in: &mut Vec<f64>,
) {
    grad_in.clear();
    grad_in.resize(input.len(), 0.0);
    match *layer {
        Layer::Dense { input: ni, output: no, relu } => {
            let (w, _) = p.split_at(ni * no);
            let (gw, gb) = g.split_at_mut(ni * no);
            for o in 0..no {
                let d = if relu && output[o] <= 0.0 { 0.0 } else { grad_out[o] };
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &w[o * ni..(o + 1) * ni];
                let grow = &mut gw[o * ni..(o + 1) * ni];
                for ((gv, xv), (wv, gi)) in grow.iter_mut().zip(input).zip(row.iter().zip(grad_in.iter_mut())) {
                    *gv += d * xv;
                    *gi += d * wv;
                }
            }
        }
        Layer::SelfCorrelation { n } => {
            for i in 0..n {
                for j in 0..n {
                    let d = grad_out[i * n + j];
                    grad_in[i] += d * input[j];
                    grad_in[j] += d * input[i];
                }
            }
        }
        Layer::Conv { cin, cout, side, kh, kw } => {
            let area = side * side;
            let nw = cout * cin * kh * kw;
            let (w, _) = p.split_at(nw);
            let (gw, gb) = g.split_at_mut(nw);
            let (ph, pw) = (same_pad(kh), same_pad(kw));
            for (d, o) in grad_out.iter_mut().zip(output) {
                if *o <= 0.0 {
                    *d = 0.0;
                }
            }
            for co in 0..cout {
                let dz = &grad_out[co * area..(co + 1) * area];
                gb[co] += dz.iter().sum::<f64>();
                for ci in 0..cin {
                    let src = &input[ci * area..(ci + 1) * area];
                    let gsrc = &mut grad_in[ci * area..(ci + 1) * area];
                    for a in 0..kh {
                        let (i0, i1) = span(a, ph, side);
                        for c in 0..kw {
                            let widx = ((co * cin + ci) * kh + a) * kw + c;
                            let wv = w[widx];
                            let (j0, j1) = span(c, pw, side);
                            let mut acc = 0.0;
                            for i in i0..i1 {
                                let si = (i + a - ph) * side;
                                let (s0, s1) = (si + j0 + c - pw, si + j1 + c - pw);
                                let d = &dz[i * side + j0..i * side + j1];
                                let s = &src[s0..s1];
                                let gs = &mut gsrc[s0..s1];
                                for ((dv, sv), gv) in d.iter().zip(s).zip(gs.iter_mut()) {
                                    acc += dv * sv;
                                    *gv += wv * dv;
                                }
                            }
                            gw[widx] += acc;
                        }
                    }
                }
            }
        }
    }
}

struct Plan<'a> {
    layers: Vec<Layer>,
    blocks: Vec<&'a [f64]>,
}

impl<'a> Plan<'a> {
    fn new(params: &'a NetParams) -> Self {
        let layers = params.arch().layers();
        let mut rest = params.as_flat();
        let blocks = layers
            .iter()
            .map(|l| {
                let (b, tail) = rest.split_at(l.param_count());
                rest = tail;
                b
            })
            .collect();
        Plan { layers, blocks }
    }

    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.layers
            .iter()
            .map(|l| {
                let o = acc;
                acc += l.param_count();
                o
            })
            .collect()
    }

    fn predict_one(&self, x: &[f64], a: &mut Vec<f64>, b: &mut Vec<f64>) -> f64 {
        a.clear();
        a.extend_from_slice(x);
        for (layer, p) in self.layers.iter().zip(&self.blocks) {
            layer_forward(layer, p, a, b);
            std::mem::swap(a, b);
        }
        a[0]
    }

    /// Forward keeping every activation; `acts[0]` is the input.
    fn forward_trace(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) -> f64 {
        acts.resize_with(self.layers.len() + 1, Vec::new);
        acts[0].clear();
        acts[0].extend_from_slice(x);
        for (l, (layer, p)) in self.layers.iter().zip(&self.blocks).enumerate() {
            let (done, rest) = acts.split_at_mut(l + 1);
            layer_forward(layer, p, &done[l], &mut rest[0]);
        }
        acts[self.layers.len()][0]
    }

    fn backward(&self, acts: &[Vec<f64>], dpred: f64, offsets: &[usize], g: &mut [f64], bufs: &mut [Vec<f64>; 2]) {
        let [ref mut up, ref mut down] = *bufs;
        up.clear();
        up.push(dpred);
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let gslice = &mut g[offsets[l]..offsets[l] + layer.param_count()];
            layer_backward(layer, self.blocks[l], gslice, &acts[l], &acts[l + 1], up, down);
            std::mem::swap(up, down);
        }
    }
}

fn check_input(params: &NetParams, x: &ArrayView2<f64>) -> Result<()> {
    let d = params.arch().input_dim;
    if x.ncols() != d && x.nrows() > 0 {
        return Err(Error::DimensionMismatch { expected: d, found: x.ncols() });
    }
    Ok(())
}

fn row_vec(x: &ArrayView2<f64>, i: usize) -> Vec<f64> {
    x.row(i).to_vec()
}

/// One scalar prediction per row.
pub fn forward(params: &NetParams, x: ArrayView2<f64>) -> Result<Array1<f64>> {
    check_input(params, &x)?;
    let plan = Plan::new(params);
    let out: Vec<f64> = (0..x.nrows())
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(a, b), i| plan.predict_one(&row_vec(&x, i), a, b),
        )
        .collect();
    Ok(Array1::from(out))
}

pub fn predict(params: &NetParams, x: ArrayView2<f64>) -> Result<Array1<f64>> {
    forward(params, x)
}

/// Mean squared error over the batch and its exact gradient with respect to
/// every entry of the flat parameter vector.
pub fn loss_and_grad(params: &NetParams, x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<(f64, Vec<f64>)> {
    check_input(params, &x)?;
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if n == 0 {
        return Err(Error::invalid("empty training batch"));
    }
    let plan = Plan::new(params);
    let offsets = plan.offsets();
    let np = params.len();
    let chunks: Vec<(f64, Vec<f64>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut g = vec![0.0; np];
            let mut sse = 0.0;
            let mut acts = Vec::new();
            let mut bufs = [Vec::new(), Vec::new()];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let pred = plan.forward_trace(&row_vec(&x, i), &mut acts);
                let r = pred - y[i];
                sse += r * r;
                plan.backward(&acts, 2.0 * r / n as f64, &offsets, &mut g, &mut bufs);
            }
            (sse, g)
        })
        .collect();
    let mut total = 0.0;
    let mut grad = vec![0.0; np];
    for (sse, g) in chunks {
        total += sse;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    Ok((total / n as f64, grad))
}

/// Smallest |pre-activation| over every ReLU unit and row of `x`. A
/// finite-difference step larger than this may cross a kink.
pub fn relu_margin(params: &NetParams, x: ArrayView2<f64>) -> Result<f64> {
    if x.ncols() != params.arch().input_dim {
        return Err(Error::DimensionMismatch { expected: params.arch().input_dim, found: x.ncols() });
    }
    let plan = Plan::new(params);
    let mut margin = f64::INFINITY;
    for row in x.rows() {
        let mut cur = row.to_vec();
        let mut raw = Vec::new();
        let mut next = Vec::new();
        for (layer, block) in plan.layers.iter().zip(&plan.blocks) {
            if matches!(layer, Layer::Conv { .. } | Layer::Dense { relu: true, .. }) {
                layer_forward_impl(layer, block, &cur, &mut raw, false);
                margin = raw.iter().fold(margin, |m, z| m.min(z.abs()));
            }
            layer_forward(layer, block, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    Ok(margin)
}
