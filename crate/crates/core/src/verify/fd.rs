//! Centered 4th-order finite differences on uniform time grids.

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    First,
    Second,
}

/// Half-width of the 5-point stencil.
pub const HALF_WIDTH: usize = 2;

/// Derivative at index `i` of a uniformly sampled series (needs i ± 2).
#[inline]
pub fn derivative_at(v: &[f64], i: usize, h: f64, s: Stencil) -> f64 {
    let (a, b, c, d, e) = (v[i - 2], v[i - 1], v[i], v[i + 1], v[i + 2]);
    match s {
        Stencil::First => (a - 8.0 * b + 8.0 * d - e) / (12.0 * h),
        Stencil::Second => (-a + 16.0 * b - 30.0 * c + 16.0 * d - e) / (12.0 * h * h),
    }
}

/// Step of a uniform grid; domain error if the grid is not uniform.
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return domain("need at least two samples");
    }
    let h = times[1] - times[0];
    if !(h > 0.0) {
        return domain("times must increase");
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1e-300) * (times.len() as f64) {
            return domain("finite differences need uniform output times");
        }
    }
    Ok(h)
}

/// Derivative of the requested order; entries within two samples of either
/// end are NaN (invalid).
pub fn differentiate_series(values: &[f64], times: &[f64], order: u8) -> Result<Vec<f64>> {
    if values.len() != times.len() {
        return domain("values and times differ in length");
    }
    if values.len() < 7 {
        return domain("need at least 7 samples");
    }
    let stencil = match order {
        1 => Stencil::First,
        2 => Stencil::Second,
        _ => return domain("order must be 1 or 2"),
    };
    let h = uniform_step(times)?;
    let n = values.len();
    Ok((0..n)
        .map(|i| if i < HALF_WIDTH || i + HALF_WIDTH >= n { f64::NAN } else { derivative_at(values, i, h, stencil) })
        .collect())
}
