//! Empirical power-type exponents of the Bregman distance.

use lqproj_core::{bregman_distance, norm, PrimalVector, Result, SpaceConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// Separations `‖x − y‖_q` are drawn log-uniformly from this range.
pub const SEPARATION_RANGE: (f64, f64) = (1e-4, 1e-1);
/// Allowed excess of the fitted slope beyond `[σ, ρ]`.
pub const SLOPE_MARGIN: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub q: f64,
    pub p: f64,
    pub radius: f64,
    pub pairs: usize,
    pub slope: f64,
    pub slope_low: f64,
    pub slope_high: f64,
    pub slope_pass: bool,
    /// Largest `|D_2(x,y) − ½‖x−y‖²| / (1 + ½‖x−y‖²)` over pairs at scales up
    /// to `10⁶`; only for `q = p = 2`.
    pub hilbert_identity_err: Option<f64>,
    pub hilbert_identity_pass: Option<bool>,
    pub pass: bool,
}

fn unit_direction(cfg: &SpaceConfig, rng: &mut ChaCha8Rng) -> PrimalVector {
    loop {
        let g = PrimalVector::new((0..cfg.n()).map(|_| rng.sample(StandardNormal)).collect());
        let len = norm(&g, cfg).expect("matching length");
        if len > 0.0 {
            return g.scaled(1.0 / len);
        }
    }
}

/// Fits the slope of `log D_p(x, y)` against `log ‖x − y‖_q` over `n_pairs`
/// seeded pairs in the `ℓ_q` ball of radius `radius` in `ℝ³`.
pub fn power_type_probe(q: f64, p: f64, radius: f64, n_pairs: usize, seed: u64) -> Result<ProbeReport> {
    power_type_probe_in(3, q, p, radius, n_pairs, seed)
}

pub fn power_type_probe_in(n: usize, q: f64, p: f64, radius: f64, n_pairs: usize, seed: u64) -> Result<ProbeReport> {
    let cfg = SpaceConfig::new(n, q, p)?;
    if radius.is_nan() || radius <= 0.0 || n_pairs < 2 {
        return Err(lqproj_core::Error::InvalidConfig(
            "probe needs a positive radius and at least two pairs".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (SEPARATION_RANGE.0.ln(), SEPARATION_RANGE.1.ln());
    let mut xs = Vec::with_capacity(n_pairs);
    let mut ys = Vec::with_capacity(n_pairs);
    while xs.len() < n_pairs {
        let x = unit_direction(&cfg, &mut rng).scaled(radius * rng.random::<f64>().powf(1.0 / n as f64));
        let sep = rng.random_range(lo..hi).exp();
        let y = &x + &unit_direction(&cfg, &mut rng).scaled(sep);
        if norm(&y, &cfg)? > radius {
            continue;
        }
        let d = bregman_distance(&x, &y, &cfg)?;
        if d > 0.0 {
            xs.push(norm(&(&x - &y), &cfg)?.ln());
            ys.push(d.ln());
        }
    }
    let slope = least_squares_slope(&xs, &ys);
    let (low, high) = (cfg.sigma() - SLOPE_MARGIN, cfg.rho() + SLOPE_MARGIN);
    let slope_pass = (low..=high).contains(&slope);

    let (err, identity_pass) = if q == 2.0 && p == 2.0 {
        let mut worst = 0.0f64;
        for k in 0..n_pairs {
            let scale = 10f64.powi((k % 13) as i32 - 6);
            let x = unit_direction(&cfg, &mut rng).scaled(scale * rng.random::<f64>());
            let y = unit_direction(&cfg, &mut rng).scaled(scale * rng.random::<f64>());
            let half = 0.5 * (&x - &y).euclidean_norm().powi(2);
            let d = bregman_distance(&x, &y, &cfg)?;
            worst = worst.max((d - half).abs() / (1.0 + half));
        }
        (Some(worst), Some(worst <= 1e-12))
    } else {
        (None, None)
    };

    Ok(ProbeReport {
        q,
        p,
        radius,
        pairs: n_pairs,
        slope,
        slope_low: low,
        slope_high: high,
        slope_pass,
        hilbert_identity_err: err,
        hilbert_identity_pass: identity_pass,
        pass: slope_pass && identity_pass.unwrap_or(true),
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hilbert_probe_has_slope_two() {
        let r = power_type_probe(2.0, 2.0, 2.0, 500, 1).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-6, "{r:?}");
        assert_eq!(r.hilbert_identity_pass, Some(true));
        assert!(r.pass);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((least_squares_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }
}
