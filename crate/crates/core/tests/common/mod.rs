//! Helpers shared by the integration tests.
#![allow(dead_code)]

use fiber_pldos::curve::argmax;
use fiber_pldos::FiberSpec;

pub const LAMBDA: f64 = 659e-9;

pub fn silica(radius: f64) -> FiberSpec {
    FiberSpec::new(radius, 1.46, 1.0, LAMBDA).unwrap()
}

/// Width of the region around the peak where the curve stays at or above
/// half maximum, with linearly interpolated crossings. Where the curve never
/// drops below half maximum before the grid ends, the grid end is used, so
/// the result is a lower bound on the full width at half maximum; the flag
/// reports whether both crossings were found.
pub fn half_max_width(xs: &[f64], ys: &[f64]) -> (f64, bool) {
    let i = argmax(ys).unwrap();
    let half = 0.5 * ys[i];
    let cross = |j: usize, k: usize| xs[j] + (half - ys[j]) * (xs[k] - xs[j]) / (ys[k] - ys[j]);
    let left = (1..=i).rev().find(|&j| ys[j - 1] < half).map(|j| cross(j - 1, j));
    let right = (i..ys.len() - 1).find(|&j| ys[j + 1] < half).map(|j| cross(j, j + 1));
    let complete = left.is_some() && right.is_some();
    (right.unwrap_or(xs[xs.len() - 1]) - left.unwrap_or(xs[0]), complete)
}

/// Sign changes of the forward-difference slope.
pub fn slope_sign_changes(ys: &[f64]) -> usize {
    let slopes: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).collect();
    slopes.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}
