//! Bregman projections `Π^p_M` and metric projections `P_M` onto subspaces.
//!
//! Both are computed in coordinates `y = Qc` over a Euclidean-orthonormal
//! basis `Q` of `M`, minimizing a smooth convex function of `c` by damped
//! Newton from the least-squares coefficients `c₀ = Qᵀx`:
//!
//! * Bregman: `c ↦ D_p(Qc, x)`, gradient `Qᵀ(j_p(Qc) − j_p(x))`;
//! * metric: `c ↦ (1/q)‖x − Qc‖_q^q`, gradient `−Qᵀ sign(r)|r|^{q−1}`.
//!
//! The metric projection is also available through the primal-dual
//! decomposition `x = P_M x + j_{p*}(Π^{p*}_{M^⊥} j_p(x))`, which only needs a
//! Bregman projection in the dual space.

mod newton;
mod oracle;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{
    abs_pow, bregman_distance, bregman_raw, dual_norm, duality_map, duality_map_inverse, duality_map_raw,
    gauge_hessian, gauge_raw, lq_norm, norm, signed_pow, PrimalVector, SpaceConfig, HESSIAN_COORD_FLOOR,
};
use crate::subspace::{annihilator, Subspace};

pub use oracle::{brute_force_project_oracle, OracleGrid, OracleMode};

use newton::{minimize, SmoothConvex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// First-order residual tolerance, relative to `1 + ‖j_p(x)‖_{q*}` for
    /// Bregman projections and to `1 + ‖|r|^{q−1}‖₂` for metric ones, `r` the
    /// least-squares residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Backtracking factor of the line search.
    pub backtrack: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Multiple of the identity added to every Hessian.
    pub hessian_floor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 200,
            backtrack: 0.5,
            armijo: 1e-4,
            hessian_floor: 1e-12,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 || self.max_iter == 0 {
            return Err(Error::InvalidConfig(
                "solver tolerance must be positive and max_iter at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    pub point: PrimalVector,
    /// `D_p(point, x)` for Bregman projections, `‖x − point‖_q` for metric ones.
    pub objective: f64,
    pub iterations: usize,
    /// Euclidean norm of the first-order optimality residual.
    pub residual: f64,
    pub converged: bool,
}

impl ProjectionResult {
    fn exact(point: PrimalVector, objective: f64) -> Self {
        Self {
            point,
            objective,
            iterations: 0,
            residual: 0.0,
            converged: true,
        }
    }
}

fn check_inputs(x: &PrimalVector, m: &Subspace, cfg: &SpaceConfig) -> Result<()> {
    cfg.check_len(x.len())?;
    cfg.check_len(m.ambient_dim())
}

struct BregmanObjective<'a> {
    basis: &'a DMatrix<f64>,
    x: &'a DVector<f64>,
    jx: DVector<f64>,
    q: f64,
    p: f64,
}

impl SmoothConvex for BregmanObjective<'_> {
    fn value(&self, c: &DVector<f64>) -> f64 {
        let y = self.basis * c;
        bregman_raw(y.as_slice(), self.x.as_slice(), self.q, self.p)
    }

    fn gradient_hessian(&self, c: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let y = self.basis * c;
        let jy = duality_map_raw(&y, self.q, self.p);
        let g = self.basis.transpose() * (jy - &self.jx);
        let h = self.basis.transpose() * gauge_hessian(&y, self.q, self.p) * self.basis;
        (g, h)
    }
}

/// `d ↦ (1/p*)‖j_p(x) + Q^⊥d‖_{q*}^{p*}`, the dual of the Bregman projection
/// problem. Its minimizer `w` gives `Π^p_M x = j_{p*}(j_p(x) + w)`; for `q < 2`
/// it is much smoother than the primal objective.
struct DualBregmanObjective<'a> {
    complement: &'a DMatrix<f64>,
    jx: &'a DVector<f64>,
    q_star: f64,
    p_star: f64,
}

impl DualBregmanObjective<'_> {
    fn functional(&self, d: &DVector<f64>) -> DVector<f64> {
        self.jx + self.complement * d
    }
}

impl SmoothConvex for DualBregmanObjective<'_> {
    fn value(&self, d: &DVector<f64>) -> f64 {
        gauge_raw(self.functional(d).as_slice(), self.q_star, self.p_star)
    }

    fn gradient_hessian(&self, d: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let u = self.functional(d);
        let g = self.complement.transpose() * duality_map_raw(&u, self.q_star, self.p_star);
        let h = self.complement.transpose() * gauge_hessian(&u, self.q_star, self.p_star) * self.complement;
        (g, h)
    }
}

struct MetricObjective<'a> {
    basis: &'a DMatrix<f64>,
    x: &'a DVector<f64>,
    q: f64,
}

impl MetricObjective<'_> {
    fn residual(&self, c: &DVector<f64>) -> DVector<f64> {
        self.x - self.basis * c
    }
}

impl SmoothConvex for MetricObjective<'_> {
    fn value(&self, c: &DVector<f64>) -> f64 {
        self.residual(c).iter().map(|&t| abs_pow(t, self.q)).sum::<f64>() / self.q
    }

    fn gradient_hessian(&self, c: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let r = self.residual(c);
        let q = self.q;
        let g = -(self.basis.transpose() * r.map(|t| signed_pow(t, q - 1.0)));
        let weights = r.map(|t| {
            let a = if q < 2.0 {
                t.abs().max(HESSIAN_COORD_FLOOR)
            } else {
                t.abs()
            };
            (q - 1.0) * abs_pow(a, q - 2.0)
        });
        let weighted = DMatrix::from_fn(self.basis.nrows(), self.basis.ncols(), |i, j| {
            weights[i] * self.basis[(i, j)]
        });
        (g, self.basis.transpose() * weighted)
    }
}

/// `Π^p_M x = argmin_{m ∈ M} D_p(m, x)`.
pub fn bregman_project(
    x: &PrimalVector,
    m: &Subspace,
    cfg: &SpaceConfig,
    opts: &SolverOptions,
) -> Result<ProjectionResult> {
    check_inputs(x, m, cfg)?;
    opts.validate()?;
    if m.is_zero() {
        let zero = PrimalVector::zeros(cfg.n());
        let d = bregman_distance(&zero, x, cfg)?;
        return Ok(ProjectionResult::exact(zero, d));
    }
    if m.is_whole() {
        return Ok(ProjectionResult::exact(x.clone(), 0.0));
    }
    let basis = m.orthonormal_basis();
    let jx = duality_map(x, cfg)?;
    let tol_abs = opts.tol * (1.0 + dual_norm(&jx, cfg)?);
    let objective = BregmanObjective {
        basis,
        x: x.coords(),
        jx: jx.into_inner(),
        q: cfg.q(),
        p: cfg.p(),
    };
    let c0 = basis.transpose() * x.coords();
    let mut out = minimize(&objective, c0, opts, tol_abs);
    if !out.converged {
        // Restart from the solution of the dual problem.
        let complement = annihilator(m);
        let dual = DualBregmanObjective {
            complement: complement.orthonormal_basis(),
            jx: &objective.jx,
            q_star: cfg.q_star(),
            p_star: cfg.p_star(),
        };
        let d0 = DVector::zeros(complement.rank());
        let w = minimize(&dual, d0, opts, opts.tol * (1.0 + norm(x, cfg)?));
        let y = duality_map_raw(&dual.functional(&w.c), cfg.q_star(), cfg.p_star());
        let polished = minimize(&objective, basis.transpose() * y, opts, tol_abs);
        out.iterations += w.iterations + polished.iterations;
        if polished.residual < out.residual {
            out.c = polished.c;
            out.residual = polished.residual;
            out.converged = polished.converged;
        }
    }
    if !out.converged {
        return Err(Error::SolverDivergence {
            iterations: out.iterations,
            residual: out.residual,
            tol: tol_abs,
        });
    }
    let point = PrimalVector::from(basis * &out.c);
    let value = bregman_distance(&point, x, cfg)?;
    Ok(ProjectionResult {
        point,
        objective: value,
        iterations: out.iterations,
        residual: out.residual,
        converged: true,
    })
}

/// `D_p(M, x) = D_p(Π^p_M x, x)`.
pub fn bregman_distance_to(m: &Subspace, x: &PrimalVector, cfg: &SpaceConfig, opts: &SolverOptions) -> Result<f64> {
    Ok(bregman_project(x, m, cfg, opts)?.objective)
}

/// The nearest point of `M` to `x` in `‖·‖_q`, by direct minimization.
pub fn metric_project_direct(
    x: &PrimalVector,
    m: &Subspace,
    cfg: &SpaceConfig,
    opts: &SolverOptions,
) -> Result<ProjectionResult> {
    check_inputs(x, m, cfg)?;
    opts.validate()?;
    if m.is_zero() {
        return Ok(ProjectionResult::exact(PrimalVector::zeros(cfg.n()), norm(x, cfg)?));
    }
    if m.is_whole() {
        return Ok(ProjectionResult::exact(x.clone(), 0.0));
    }
    let q = cfg.q();
    let basis = m.orthonormal_basis();
    // Gradient entries are of the size of |r|^{q−1} for the least-squares
    // residual r, which can be far below |x|^{q−1}.
    let r0 = x.coords() - m.euclidean_projection(x.coords());
    let scale = r0.map(|t| signed_pow(t, q - 1.0)).norm();
    let tol_abs = opts.tol * (1.0 + scale);
    let objective = MetricObjective {
        basis,
        x: x.coords(),
        q,
    };
    let c0 = basis.transpose() * x.coords();
    let mut out = minimize(&objective, c0, opts, tol_abs);
    if !out.converged {
        // Restart from the primal-dual decomposition, whose dual problem is
        // smooth when the primal one is not.
        if let Ok(residual) = metric_residual_via_duality(x, m, cfg, opts) {
            let polished = minimize(&objective, basis.transpose() * (x - &residual).coords(), opts, tol_abs);
            out.iterations += polished.iterations;
            if polished.residual < out.residual {
                out.c = polished.c;
                out.residual = polished.residual;
                out.converged = polished.converged;
            }
        }
    }
    if !out.converged {
        return Err(Error::SolverDivergence {
            iterations: out.iterations,
            residual: out.residual,
            tol: tol_abs,
        });
    }
    let point = PrimalVector::from(basis * &out.c);
    let dist = lq_norm((x - &point).as_slice(), q);
    Ok(ProjectionResult {
        point,
        objective: dist,
        iterations: out.iterations,
        residual: out.residual,
        converged: true,
    })
}

/// `(I − P_M)x = j_{p*}(Π^{p*}_{M^⊥} j_p(x))`, computed entirely through a
/// Bregman projection in the dual space.
pub fn metric_residual_via_duality(
    x: &PrimalVector,
    m: &Subspace,
    cfg: &SpaceConfig,
    opts: &SolverOptions,
) -> Result<PrimalVector> {
    check_inputs(x, m, cfg)?;
    let dual = cfg.dual();
    let perp = annihilator(m);
    let y = duality_map(x, cfg)?.as_point();
    let projected = bregman_project(&y, &perp, &dual, opts)?.point;
    duality_map_inverse(&projected.as_functional(), cfg)
}

/// `P_M x = x − j_{p*}(Π^{p*}_{M^⊥} j_p(x))`.
pub fn metric_project_via_duality(
    x: &PrimalVector,
    m: &Subspace,
    cfg: &SpaceConfig,
    opts: &SolverOptions,
) -> Result<PrimalVector> {
    let residual = metric_residual_via_duality(x, m, cfg, opts)?;
    Ok(x - &residual)
}
