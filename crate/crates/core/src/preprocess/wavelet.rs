//! Orthonormal Haar decomposition used for dyadic dimensionality reduction.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::{Error, Result};

/// Number of 2:1 stages that reduce `dim` points to `target` coefficients.
pub fn haar_levels(dim: usize, target: usize) -> Result<usize> {
    if target == 0 || !dim.is_multiple_of(target) || !(dim / target).is_power_of_two() {
        return Err(Error::invalid(format!(
            "wavelet target {target} must divide {dim} by a power of two"
        )));
    }
    Ok((dim / target).trailing_zeros() as usize)
}

/// One analysis stage: `(approximation, detail)` halves.
pub fn haar_step(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    x.chunks_exact(2)
        .map(|p| ((p[0] + p[1]) * FRAC_1_SQRT_2, (p[0] - p[1]) * FRAC_1_SQRT_2))
        .unzip()
}

/// Full `levels`-stage analysis: final approximation plus the detail bands,
/// finest first.
pub fn haar_analysis(x: &[f64], levels: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if levels > 0 && !x.len().is_multiple_of(1 << levels) {
        return Err(Error::invalid(format!(
            "length {} is not divisible by 2^{levels}",
            x.len()
        )));
    }
    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = haar_step(&approx);
        approx = a;
        details.push(d);
    }
    Ok((approx, details))
}

/// Keeps only the final approximation coefficients, `target` of them.
pub fn wavelet_decompose(x: &[f64], target: usize) -> Result<Vec<f64>> {
    let levels = haar_levels(x.len(), target)?;
    Ok(haar_analysis(x, levels)?.0)
}
