//! Log-linear fits of `D_n ≈ C q^n`.

use serde::Serialize;

use super::IterationTrace;
use crate::error::{Error, Result};

/// Leading iterates excluded from a rate fit.
pub const RATE_SKIP: usize = 3;
/// Values at or below this are treated as rounding noise and end the window.
pub const RATE_FLOOR: f64 = 1e-13;
const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub q_hat: f64,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    pub r_squared: f64,
    /// Half-open index range `[start, end)` of the fitted values.
    pub window: (usize, usize),
}

/// Fits the Bregman distances to the limit recorded in `trace`.
pub fn estimate_linear_rate(trace: &IterationTrace) -> Result<RateEstimate> {
    estimate_linear_rate_from(&trace.d_breg_to_limit)
}

/// Least-squares fit of `log D_n = log C + n log q` over `n ≥ 3`, stopping
/// at the first value at or below the rounding floor.
pub fn estimate_linear_rate_from(values: &[f64]) -> Result<RateEstimate> {
    let start = RATE_SKIP.min(values.len());
    let end = values[start..]
        .iter()
        .position(|&v| !v.is_finite() || v <= RATE_FLOOR)
        .map_or(values.len(), |k| start + k);
    let count = end - start;
    if count < MIN_POINTS {
        return Err(Error::InsufficientDecay(count));
    }
    let xs: Vec<f64> = (start..end).map(|i| i as f64).collect();
    let ys: Vec<f64> = values[start..end].iter().map(|v| v.ln()).collect();
    let nf = count as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateEstimate {
        q_hat: slope.exp(),
        c_hat: intercept.exp(),
        r_squared,
        window: (start, end),
    })
}
