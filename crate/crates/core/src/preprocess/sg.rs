//! Savitzky-Golay smoothing.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Precomputed least-squares evaluation weights for one window/order pair.
///
/// `weights[r]` evaluates, at window position `r`, the degree-`polyorder`
/// polynomial fitted to the `window` samples. Interior points use the center
/// row. The first and last `window / 2` points use the off-center rows of the
/// first and last full window, so polynomials up to `polyorder` pass through
/// unchanged everywhere, including the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SavitzkyGolay {
    window: usize,
    polyorder: usize,
    weights: Vec<Vec<f64>>,
}

impl SavitzkyGolay {
    pub fn new(window: usize, polyorder: usize) -> Result<Self> {
        if window.is_multiple_of(2) {
            return Err(Error::invalid(format!("SG window must be odd, got {window}")));
        }
        if polyorder >= window {
            return Err(Error::invalid(format!(
                "SG polyorder {polyorder} must be smaller than the window {window}"
            )));
        }
        let half = (window / 2) as f64;
        let scale = half.max(1.0);
        let cols = polyorder + 1;
        // Vandermonde on centered, scaled abscissae for conditioning.
        let vander = DMatrix::from_fn(window, cols, |r, c| ((r as f64 - half) / scale).powi(c as i32));
        let normal = vander.transpose() * &vander;
        let chol = normal
            .cholesky()
            .ok_or_else(|| Error::Degenerate("SG normal equations are singular".into()))?;
        // hat matrix H = V (VᵀV)⁻¹ Vᵀ; row r evaluates the fit at position r
        let solved = chol.solve(&vander.transpose());
        let hat = &vander * solved;
        let weights = (0..window).map(|r| hat.row(r).iter().copied().collect()).collect();
        Ok(SavitzkyGolay { window, polyorder, weights })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn polyorder(&self) -> usize {
        self.polyorder
    }

    /// Weights applied around an interior point.
    pub fn center_weights(&self) -> &[f64] {
        &self.weights[self.window / 2]
    }

    pub fn smooth(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = x.len();
        let w = self.window;
        if w > d {
            return Err(Error::invalid(format!("SG window {w} exceeds spectrum length {d}")));
        }
        let h = w / 2;
        let dot = |coef: &[f64], seg: &[f64]| coef.iter().zip(seg).map(|(c, v)| c * v).sum::<f64>();
        let mut out = vec![0.0; d];
        let center = self.center_weights();
        for i in h..d - h {
            out[i] = dot(center, &x[i - h..i + h + 1]);
        }
        for i in 0..h {
            out[i] = dot(&self.weights[i], &x[..w]);
            out[d - h + i] = dot(&self.weights[h + 1 + i], &x[d - w..]);
        }
        Ok(out)
    }
}

/// Smooths with a fresh filter; prefer [`SavitzkyGolay`] when smoothing many spectra.
pub fn sg_smooth(x: &[f64], window: usize, polyorder: usize) -> Result<Vec<f64>> {
    SavitzkyGolay::new(window, polyorder)?.smooth(x)
}
