//! Synthetic Beer-Lambert spectra.
//!
//! Absorbance at point λ of sample i is
//!
//! ```text
//! x_i(λ) = m_i · (baseline(λ) + sugar_i · Σ_j a_j · exp(-(λ - c_j)² / (2 w_j²))) + b_i + ε_iλ
//! ```
//!
//! with multiplicative scatter `m_i ~ N(1, scatter_std)`, additive offset
//! `b_i ~ N(0, offset_std)` and white noise `ε ~ N(0, noise_std)`. The
//! generator is a stand-in for real fruit spectra and is labelled as such
//! wherever its output is reported.

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SpectraDataset;
use crate::rng;
use crate::{Error, Result};

/// A Gaussian absorption band whose height scales with sugar content.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Band center, in wavelength-point index units.
    pub center: f64,
    /// Gaussian width (standard deviation) in points.
    pub width: f64,
    /// Absorbance per °Brix at the band center.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub dim: usize,
    pub sugar_mean: f64,
    pub sugar_std: f64,
    pub peaks: Vec<Peak>,
    pub baseline_amplitude: f64,
    pub scatter_std: f64,
    pub offset_std: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Pear-like labels (mean 12.04 °Brix, STD 0.95) over 1600 points.
    pub fn pear(n_samples: usize, seed: u64) -> Self {
        SynthConfig {
            n_samples,
            dim: 1600,
            sugar_mean: 12.04,
            sugar_std: 0.95,
            peaks: vec![
                Peak { center: 430.0, width: 30.0, amplitude: 0.004 },
                Peak { center: 910.0, width: 55.0, amplitude: 0.006 },
                Peak { center: 1330.0, width: 22.0, amplitude: 0.003 },
            ],
            baseline_amplitude: 1.0,
            scatter_std: 0.08,
            offset_std: 0.02,
            noise_std: 0.02,
            seed,
        }
    }

    /// Navel-orange-like labels (mean 14.57 °Brix, STD 1.64).
    pub fn navel(n_samples: usize, seed: u64) -> Self {
        SynthConfig { sugar_mean: 14.57, sugar_std: 1.64, ..Self::pear(n_samples, seed) }
    }

    /// Resamples the wavelength axis to `dim` points, moving and widening
    /// the bands proportionally.
    pub fn with_dim(mut self, dim: usize) -> Self {
        let scale = dim as f64 / self.dim as f64;
        for p in &mut self.peaks {
            p.center *= scale;
            p.width = (p.width * scale).max(0.5);
        }
        self.dim = dim;
        self
    }

    /// Noise- and scatter-free spectra: every point is affine in sugar.
    pub fn linear(n_samples: usize, dim: usize, seed: u64) -> Self {
        SynthConfig {
            n_samples,
            dim,
            sugar_mean: 12.0,
            sugar_std: 1.0,
            peaks: vec![Peak {
                center: dim as f64 / 2.0,
                width: (dim as f64 / 10.0).max(0.5),
                amplitude: 0.01,
            }],
            baseline_amplitude: 1.0,
            scatter_std: 0.0,
            offset_std: 0.0,
            noise_std: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dim must be at least 1"));
        }
        if self.peaks.is_empty() {
            return Err(Error::invalid("at least one peak is required"));
        }
        let stds = [
            ("sugar_std", self.sugar_std),
            ("scatter_std", self.scatter_std),
            ("offset_std", self.offset_std),
            ("noise_std", self.noise_std),
        ];
        for (name, v) in stds {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !self.sugar_mean.is_finite() || !self.baseline_amplitude.is_finite() {
            return Err(Error::invalid("sugar_mean and baseline_amplitude must be finite"));
        }
        for p in &self.peaks {
            if !(p.width > 0.0 && p.width.is_finite() && p.amplitude.is_finite() && p.center.is_finite()) {
                return Err(Error::invalid(format!("invalid peak {p:?}")));
            }
            if (self.dim as f64) < 2.0 * p.width {
                return Err(Error::invalid(format!(
                    "dim {} is smaller than twice the peak width {}",
                    self.dim, p.width
                )));
            }
        }
        Ok(())
    }

    /// Smooth sugar-independent background absorbance.
    pub fn baseline(&self) -> Vec<f64> {
        let span = (self.dim.max(2) - 1) as f64;
        (0..self.dim)
            .map(|l| {
                let t = l as f64 / span;
                self.baseline_amplitude
                    * (0.6 + 0.25 * (2.0 * std::f64::consts::PI * 1.3 * t + 0.4).sin() + 0.3 * t)
            })
            .collect()
    }

    /// Σ_j a_j·exp(-(λ-c_j)²/(2w_j²)): absorbance contributed per °Brix.
    pub fn sugar_profile(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|l| {
                self.peaks
                    .iter()
                    .map(|p| {
                        let d = l as f64 - p.center;
                        p.amplitude * (-d * d / (2.0 * p.width * p.width)).exp()
                    })
                    .sum()
            })
            .collect()
    }
}

const MIN_SUGAR: f64 = 1e-6;

pub fn synthesize(config: &SynthConfig) -> Result<SpectraDataset> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed);
    let normal = |mean: f64, std: f64| Normal::new(mean, std).expect("validated std");
    let sugar_dist = normal(config.sugar_mean, config.sugar_std);
    let scatter_dist = normal(1.0, config.scatter_std);
    let offset_dist = normal(0.0, config.offset_std);
    let noise_dist = normal(0.0, config.noise_std);

    let baseline = config.baseline();
    let profile = config.sugar_profile();
    let (n, dim) = (config.n_samples, config.dim);

    let mut spectra = Array2::zeros((n, dim));
    let mut sugar = Array1::zeros(n);
    for i in 0..n {
        let s = sugar_dist.sample(&mut rng).max(MIN_SUGAR);
        let m = scatter_dist.sample(&mut rng);
        let b = offset_dist.sample(&mut rng);
        sugar[i] = s;
        let mut row = spectra.row_mut(i);
        for l in 0..dim {
            let eps = noise_dist.sample(&mut rng);
            row[l] = m * (baseline[l] + s * profile[l]) + b + eps;
        }
    }
    let ids = (1..=n).map(|i| format!("S{i:04}")).collect();
    SpectraDataset::new(ids, spectra, sugar)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_free_is_affine_in_sugar() {
        let cfg = SynthConfig::linear(20, 64, 5);
        let d = synthesize(&cfg).unwrap();
        let base = cfg.baseline();
        let prof = cfg.sugar_profile();
        for i in 0..d.len() {
            for l in 0..d.dim() {
                let expect = base[l] + d.sugar()[i] * prof[l];
                assert!((d.spectra()[[i, l]] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = synthesize(&SynthConfig::pear(10, 3)).unwrap();
        let b = synthesize(&SynthConfig::pear(10, 3)).unwrap();
        let c = synthesize(&SynthConfig::pear(10, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.spectra(), c.spectra());
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = SynthConfig::linear(5, 10, 0);
        cfg.peaks.clear();
        assert!(synthesize(&cfg).is_err());
        let mut cfg = SynthConfig::linear(5, 10, 0);
        cfg.noise_std = -1.0;
        assert!(synthesize(&cfg).is_err());
        let mut cfg = SynthConfig::linear(5, 10, 0);
        cfg.peaks[0].width = 6.0;
        assert!(synthesize(&cfg).is_err());
        let cfg = SynthConfig::pear(0, 0);
        assert!(synthesize(&cfg).is_err());
    }
}
