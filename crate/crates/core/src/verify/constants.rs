use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cap threshold `<x, w> >= 1/2` used in the width estimate.
pub const CAP_THRESHOLD: f64 = 0.5;

/// `θ({x : <x, w> >= t}) / θ(S^n)` for `t ∈ [-1, 1]`.
pub fn cap_fraction(n: usize, t: f64) -> Result<f64> {
    let t = t.clamp(-1.0, 1.0);
    match n {
        1 => Ok(t.acos() / PI),
        2 => Ok((1.0 - t) / 2.0),
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

/// `c₁ = ½ θ({<x, w> >= ½}) / θ(S^n)`: 1/6 on S^1, 1/8 on S^2.
pub fn compute_c1(n: usize) -> Result<f64> {
    Ok(0.5 * cap_fraction(n, CAP_THRESHOLD)?)
}

/// Dimensional constants of the stability estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityConstants {
    pub dimension: usize,
    pub c1: f64,
    /// `γ = 1 / (c₁ √(n+1))`.
    pub gamma: f64,
    pub cap_threshold: f64,
}

impl StabilityConstants {
    pub fn new(n: usize) -> Result<Self> {
        let c1 = compute_c1(n)?;
        Ok(StabilityConstants {
            dimension: n,
            c1,
            gamma: 1.0 / (c1 * ((n + 1) as f64).sqrt()),
            cap_threshold: CAP_THRESHOLD,
        })
    }
}
