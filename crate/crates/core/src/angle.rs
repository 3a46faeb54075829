//! Angle helpers. Attitudes are stored unwrapped; wrapping happens only where
//! an angular *difference* is measured.

use core::f64::consts::{PI, TAU};
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;

/// Wraps an angle to the half-open interval (−π, π].
pub fn wrap_pi(a: f64) -> f64 {
    let mut r = a % TAU;
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// Wraps an angle to [0, 2π).
pub fn wrap_two_pi(a: f64) -> f64 {
    let r = a % TAU;
    let r = if r < 0.0 { r + TAU } else { r };
    // `r + TAU` can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Representative of `target` (mod 2π) closest to `reference`.
pub fn nearest_equivalent(target: f64, reference: f64) -> f64 {
    reference + wrap_pi(target - reference)
}

/// Rotates a planar vector by `theta`.
#[inline]
pub fn rotate(v: [f64; 2], theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Rotates a planar vector by `-theta` (applies R(θ)ᵀ).
#[inline]
pub fn rotate_inv(v: [f64; 2], theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
}
