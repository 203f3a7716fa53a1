use crate::{Error, Result};

/// First derivative per point: central differences inside, second-order
/// one-sided stencils at the ends (first-order when only two points exist).
fn first_difference(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut out = vec![0.0; d];
    for i in 1..d - 1 {
        out[i] = (x[i + 1] - x[i - 1]) / 2.0;
    }
    if d == 2 {
        out[0] = x[1] - x[0];
        out[1] = out[0];
    } else {
        out[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / 2.0;
        out[d - 1] = (3.0 * x[d - 1] - 4.0 * x[d - 2] + x[d - 3]) / 2.0;
    }
    out
}

/// Finite-difference derivative of order 1 or 2; order 2 applies the first
/// difference twice. Output has the input length.
pub fn derivative(x: &[f64], order: u8) -> Result<Vec<f64>> {
    if !(1..=2).contains(&order) {
        return Err(Error::invalid(format!("derivative order must be 1 or 2, got {order}")));
    }
    if x.len() < order as usize + 1 {
        return Err(Error::invalid(format!(
            "order-{order} derivative needs at least {} points, got {}",
            order + 1,
            x.len()
        )));
    }
    let once = first_difference(x);
    Ok(if order == 1 { once } else { first_difference(&once) })
}
