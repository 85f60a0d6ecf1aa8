use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smoothing map from a distance (0 = perfect match) to a similarity in
/// `(fy/2, 1]`.
///
/// Cosine branch on `[0, fx)`, arctangent branch from `fx` on. Both branches
/// evaluate to `fy` at `x = fx`, and the function decays towards `fy / 2`.
pub fn phi(x: f64, fx: f64, fy: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidParameter(format!("phi: distance must be >= 0, got {x}")));
    }
    if !(fx > 0.0 && fx.is_finite()) {
        return Err(Error::InvalidParameter(format!("phi: fx must be > 0, got {fx}")));
    }
    if !(fy > 0.0 && fy < 1.0) {
        return Err(Error::InvalidParameter(format!("phi: fy must be in (0, 1), got {fy}")));
    }
    Ok(phi_unchecked(x, fx, fy))
}

pub(crate) fn phi_unchecked(x: f64, fx: f64, fy: f64) -> f64 {
    if x < fx {
        fy + (1.0 - fy) * (PI * x / (2.0 * fx)).cos()
    } else {
        let arg = x * (x - fx) * (1.0 - fy) / (fx * fy);
        fy * (1.0 - arg.atan() / PI)
    }
}
