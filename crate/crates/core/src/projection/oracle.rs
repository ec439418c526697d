//! Derivative-free reference projections for small subspaces.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{duality_map, gauge, lq_norm, PrimalVector, SpaceConfig};
use crate::subspace::Subspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Bregman,
    Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleGrid {
    pub points_per_axis: usize,
    /// Compass search stops once its step falls below this.
    pub polish_tol: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            points_per_axis: 41,
            polish_tol: 1e-9,
        }
    }
}

const MAX_ORACLE_RANK: usize = 3;
const MAX_POLISH_EVALS: usize = 2_000_000;

/// Minimizes the projection objective over coefficients in an orthonormal
/// basis of `m`: exhaustive grid search on a cube, then compass search.
///
/// Bregman mode minimizes `(1/p)‖y‖^p − ⟨j_p(x), y⟩`, which differs from
/// `D_p(y, x)` by a constant; metric mode minimizes `Σ|x_i − y_i|^q`.
pub fn brute_force_project_oracle(
    x: &PrimalVector,
    m: &Subspace,
    cfg: &SpaceConfig,
    mode: OracleMode,
    grid: OracleGrid,
) -> Result<PrimalVector> {
    cfg.check_len(x.len())?;
    cfg.check_len(m.ambient_dim())?;
    let r = m.rank();
    if r > MAX_ORACLE_RANK {
        return Err(Error::OracleRankTooHigh(r));
    }
    if r == 0 {
        return Ok(PrimalVector::zeros(cfg.n()));
    }
    if grid.points_per_axis < 2 || grid.polish_tol.is_nan() || grid.polish_tol <= 0.0 {
        return Err(Error::InvalidConfig(
            "oracle grid needs at least 2 points per axis and a positive polish tolerance".into(),
        ));
    }

    let basis = m.orthonormal_basis().clone();
    let jx = duality_map(x, cfg)?;
    let q = cfg.q();
    let point = |c: &[f64]| PrimalVector::from(&basis * DVector::from_column_slice(c));
    let objective = |c: &[f64]| -> f64 {
        let y = point(c);
        match mode {
            OracleMode::Bregman => gauge(&y, cfg).unwrap_or(f64::INFINITY) - jx.pair(&y),
            OracleMode::Metric => {
                let d = lq_norm((x - &y).as_slice(), q);
                d.powf(q)
            }
        }
    };

    let radius = 2.0 * lq_norm(x.as_slice(), q).max(x.euclidean_norm());
    if radius == 0.0 {
        return Ok(PrimalVector::zeros(cfg.n()));
    }
    let k = grid.points_per_axis;
    let spacing = 2.0 * radius / (k - 1) as f64;

    let mut best = vec![0.0; r];
    let mut best_val = objective(&best);
    let mut idx = vec![0usize; r];
    let mut c = vec![0.0; r];
    'grid: loop {
        for (ci, &ii) in c.iter_mut().zip(&idx) {
            *ci = -radius + spacing * ii as f64;
        }
        let v = objective(&c);
        if v < best_val {
            best_val = v;
            best.copy_from_slice(&c);
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < k {
                continue 'grid;
            }
            *slot = 0;
        }
        break;
    }

    let mut step = spacing;
    let mut evals = 0;
    while step >= grid.polish_tol && evals < MAX_POLISH_EVALS {
        let mut improved = false;
        for axis in 0..r {
            for sign in [1.0, -1.0] {
                let mut trial = best.clone();
                trial[axis] += sign * step;
                let v = objective(&trial);
                evals += 1;
                if v < best_val {
                    best_val = v;
                    best = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(point(&best))
}
