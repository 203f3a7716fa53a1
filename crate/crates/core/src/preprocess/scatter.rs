//! Scatter corrections: MSC and SNV.

use ndarray::ArrayView2;

use crate::{Error, Result};

const MIN_SLOPE: f64 = 1e-9;
const MIN_STD: f64 = 1e-12;

/// MSC reference: the pointwise mean of the training spectra.
pub fn msc_fit(training: ArrayView2<f64>) -> Result<Vec<f64>> {
    if training.nrows() < 2 {
        return Err(Error::invalid(format!(
            "MSC needs at least 2 training spectra, got {}",
            training.nrows()
        )));
    }
    let n = training.nrows() as f64;
    Ok(training.columns().into_iter().map(|c| c.sum() / n).collect())
}

/// Regresses `x = a + b·reference` by OLS and returns `(x - a) / b`.
pub fn msc_apply(x: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    if x.len() != reference.len() {
        return Err(Error::DimensionMismatch { expected: reference.len(), found: x.len() });
    }
    let n = x.len() as f64;
    let rm = reference.iter().sum::<f64>() / n;
    let xm = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (r, v) in reference.iter().zip(x) {
        sxy += (r - rm) * (v - xm);
        sxx += (r - rm) * (r - rm);
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("MSC reference spectrum is constant".into()));
    }
    let b = sxy / sxx;
    if b.abs() <= MIN_SLOPE {
        return Err(Error::Degenerate(format!("MSC slope {b:e} is too close to zero")));
    }
    let a = xm - b * rm;
    Ok(x.iter().map(|v| (v - a) / b).collect())
}

/// Standard normal variate: centers and scales a spectrum by its own mean and
/// population standard deviation.
pub fn snv(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std > MIN_STD) {
        return Err(Error::Degenerate("SNV of a constant spectrum".into()));
    }
    Ok(x.iter().map(|v| (v - mean) / std).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rand_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn msc_reference_is_mean() {
        assert_eq!(msc_fit(array![[0.0, 0.0], [2.0, 2.0]].view()).unwrap(), vec![1.0, 1.0]);
        let s = array![[1.0, 5.0, 2.0], [1.0, 5.0, 2.0]];
        assert_eq!(msc_fit(s.view()).unwrap(), vec![1.0, 5.0, 2.0]);
        assert!(msc_fit(array![[1.0, 2.0]].view()).is_err());

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = Array2::from_shape_fn((10, 50), |_| rng.random_range(-3.0..3.0));
        let reference = msc_fit(m.view()).unwrap();
        for j in 0..50 {
            let oracle: f64 = (0..10).map(|i| m[[i, j]]).sum::<f64>() / 10.0;
            assert!((reference[j] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn msc_removes_affine_scatter() {
        let reference = vec![0.2, 0.9, 1.4, 0.7, 0.3];
        assert_eq!(msc_apply(&reference, &reference).unwrap(), reference);
        let x: Vec<f64> = reference.iter().map(|r| 2.0 * r + 3.0).collect();
        for (a, b) in msc_apply(&x, &reference).unwrap().iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn msc_residuals_orthogonal_to_reference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let reference = rand_vec(&mut rng, 40);
        let x = rand_vec(&mut rng, 40);
        // OLS oracle: the residual x - a - b·r must be orthogonal to r and to 1.
        let out = msc_apply(&x, &reference).unwrap();
        // out = (x - a)/b, so x - a - b r = b (out - r)
        let resid: Vec<f64> = out.iter().zip(&reference).map(|(o, r)| o - r).collect();
        let dot_r: f64 = resid.iter().zip(&reference).map(|(e, r)| e * r).sum();
        let dot_1: f64 = resid.iter().sum();
        assert!(dot_r.abs() < 1e-9 && dot_1.abs() < 1e-9);
    }

    #[test]
    fn msc_degenerate_reference() {
        assert!(msc_apply(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(msc_apply(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(msc_apply(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn snv_examples() {
        let out = snv(&[1.0, 2.0, 3.0]).unwrap();
        let s = (2.0f64 / 3.0).sqrt();
        let expect = [-1.0 / s, 0.0, 1.0 / s];
        for (a, b) in out.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((out[2] - 1.224744871391589).abs() < 1e-12);
        assert!(snv(&[5.0, 5.0, 5.0]).is_err());
        let again = snv(&out).unwrap();
        for (a, b) in again.iter().zip(&out) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn snv_standardizes(x in proptest::collection::vec(-100.0f64..100.0, 2..300)) {
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let spread = x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            prop_assume!(spread > 1e-6);
            let y = snv(&x).unwrap();
            let n = y.len() as f64;
            let m = y.iter().sum::<f64>() / n;
            let sd = (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
            prop_assert!(m.abs() < 1e-12);
            prop_assert!((sd - 1.0).abs() < 1e-12);
        }

        #[test]
        fn msc_idempotent(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let reference: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).sin() + 1.5).collect();
            let x: Vec<f64> = reference.iter().map(|r| 1.3 * r - 0.4 + rng.random_range(-0.1..0.1)).collect();
            let once = msc_apply(&x, &reference).unwrap();
            let twice = msc_apply(&once, &reference).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
