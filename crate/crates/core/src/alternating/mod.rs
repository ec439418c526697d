//! Alternating Bregman projections, the alternating residual method in primal
//! and dual form, and its cyclic k-subspace variant.

mod rate;

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::{bregman_project, metric_project_direct, SolverOptions};
use crate::space::{bregman_distance, duality_map, duality_map_inverse, norm, DualVector, PrimalVector, SpaceConfig};
use crate::subspace::{annihilator, intersect, sum_all, Subspace};

pub use rate::{estimate_linear_rate, estimate_linear_rate_from, RateEstimate, RATE_FLOOR, RATE_SKIP};

/// Step gaps above this at `max_iter` are reported as non-convergence.
pub const NONCONVERGENCE_GAP: f64 = 1e-6;

/// Steps without a new smallest step gap before a run is declared stalled.
const STALL_WINDOW: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopRule {
    /// Threshold on the step quantity `D_p(x_{n+1}, x_n)`.
    pub tol_step: f64,
    pub max_iter: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            tol_step: 1e-12,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    BregmanProjectionOfX0,
    ResidualProjectionOfX0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TolReached,
    MaxIter,
    Stalled,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::TolReached => "tol_reached",
            StopReason::MaxIter => "max_iter",
            StopReason::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Direct,
    Dual,
}

/// A recorded run. All per-iterate lists share one length; entry 0 is `x_0`.
///
/// For Bregman runs `d_breg_to_limit[n] = D_p(x*, x_n)`. For residual runs it
/// is `D_p(x_n, x*)`, which equals the dual distance `D_{p*}(j_p x*, j_p x_n)`
/// that decreases along the dual iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub iterates: Vec<PrimalVector>,
    /// `y_n = j_p(x_n)` as iterated by the dual engine; empty otherwise.
    pub dual_iterates: Vec<DualVector>,
    pub d_breg_to_limit: Vec<f64>,
    pub dist_to_limit: Vec<f64>,
    pub norms: Vec<f64>,
    /// `D_p(x_n, x_{n−1})`, with 0 recorded for `x_0`.
    pub step_gaps: Vec<f64>,
    pub limit: PrimalVector,
    pub limit_kind: LimitKind,
    pub stop_reason: StopReason,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    /// Number of recorded steps beyond `x_0`.
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn last(&self) -> &PrimalVector {
        self.iterates.last().expect("trace holds at least x0")
    }

    /// Writes `iter,d_breg_to_limit,dist_to_limit,norm,step_gap` rows with 17
    /// significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "iter,d_breg_to_limit,dist_to_limit,norm,step_gap")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{i},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.d_breg_to_limit[i], self.dist_to_limit[i], self.norms[i], self.step_gaps[i]
            )?;
        }
        Ok(())
    }
}

struct Point {
    x: PrimalVector,
    y: Option<DualVector>,
}

/// Shared loop: applies `step(k, ·)` for `k = 0, 1, …, cycle−1, 0, …` and
/// records every iterate that moved by more than `tol_step`. The run stops
/// once a full cycle of steps stays below `tol_step`.
#[allow(clippy::too_many_arguments)]
fn drive<S, D>(
    x0: &PrimalVector,
    y0: Option<DualVector>,
    cycle: usize,
    cfg: &SpaceConfig,
    stop: &StopRule,
    limit: PrimalVector,
    limit_kind: LimitKind,
    mut step: S,
    d_limit: D,
) -> Result<IterationTrace>
where
    S: FnMut(usize, &Point) -> Result<Point>,
    D: Fn(&PrimalVector, &PrimalVector) -> Result<f64>,
{
    if stop.tol_step.is_nan() || stop.tol_step <= 0.0 {
        return Err(Error::InvalidConfig("tol_step must be positive".into()));
    }
    cfg.check_len(x0.len())?;
    let q = cfg.q();
    let dist = |x: &PrimalVector| crate::space::lq_norm((&limit - x).as_slice(), q);

    let mut trace = IterationTrace {
        iterates: vec![x0.clone()],
        dual_iterates: y0.iter().cloned().collect(),
        d_breg_to_limit: vec![d_limit(&limit, x0)?],
        dist_to_limit: vec![dist(x0)],
        norms: vec![norm(x0, cfg)?],
        step_gaps: vec![0.0],
        limit: limit.clone(),
        limit_kind,
        stop_reason: StopReason::MaxIter,
    };

    let mut current = Point { x: x0.clone(), y: y0 };
    let mut quiet = 0;
    let mut best_gap = f64::INFINITY;
    let mut since_best = 0;
    let mut last_gap = f64::INFINITY;
    for it in 0..stop.max_iter {
        let next = step(it % cycle, &current)?;
        let gap = bregman_distance(&next.x, &current.x, cfg)?;
        last_gap = gap;
        current = next;
        if gap <= stop.tol_step {
            quiet += 1;
            if quiet >= cycle {
                trace.stop_reason = StopReason::TolReached;
                return Ok(trace);
            }
            continue;
        }
        quiet = 0;
        trace.d_breg_to_limit.push(d_limit(&limit, &current.x)?);
        trace.dist_to_limit.push(dist(&current.x));
        trace.norms.push(norm(&current.x, cfg)?);
        trace.step_gaps.push(gap);
        trace.iterates.push(current.x.clone());
        if let Some(y) = &current.y {
            trace.dual_iterates.push(y.clone());
        }
        if gap < best_gap {
            best_gap = gap;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STALL_WINDOW {
                trace.stop_reason = StopReason::Stalled;
                return Ok(trace);
            }
        }
    }
    if last_gap > NONCONVERGENCE_GAP {
        return Err(Error::NonConvergence {
            iterations: stop.max_iter,
            step_gap: last_gap,
        });
    }
    Ok(trace)
}

fn check_pair(m: &Subspace, n: &Subspace, cfg: &SpaceConfig) -> Result<()> {
    cfg.check_len(m.ambient_dim())?;
    cfg.check_len(n.ambient_dim())
}

/// `x_{2k+1} = Π^p_M x_{2k}`, `x_{2k+2} = Π^p_N x_{2k+1}`, recorded against
/// the limit `Π^p_{M∩N} x_0` computed by a direct projection.
pub fn alternate_bregman(
    x0: &PrimalVector,
    m: &Subspace,
    n: &Subspace,
    cfg: &SpaceConfig,
    stop: &StopRule,
    opts: &SolverOptions,
) -> Result<IterationTrace> {
    check_pair(m, n, cfg)?;
    let meet = intersect(m, n)?;
    let limit = bregman_project(x0, &meet, cfg, opts)?.point;
    let targets = [m, n];
    drive(
        x0,
        None,
        2,
        cfg,
        stop,
        limit,
        LimitKind::BregmanProjectionOfX0,
        |k, p| {
            Ok(Point {
                x: bregman_project(&p.x, targets[k], cfg, opts)?.point,
                y: None,
            })
        },
        |lim, x| bregman_distance(lim, x, cfg),
    )
}

/// `x ↦ (I − P_N)(I − P_M)x`, converging to `(I − P_{M+N}) x_0`.
///
/// The dual engine iterates `y_{k+1} = Π^{p*}_{M^⊥} y_k` (then `N^⊥`) from
/// `y_0 = j_p(x_0)` in `ℓ_{q*}` and records `x_k = j_{p*}(y_k)`.
pub fn alternate_residual_metric(
    x0: &PrimalVector,
    m: &Subspace,
    n: &Subspace,
    cfg: &SpaceConfig,
    stop: &StopRule,
    engine: Engine,
    opts: &SolverOptions,
) -> Result<IterationTrace> {
    check_pair(m, n, cfg)?;
    match engine {
        Engine::Direct => residual_direct(x0, &[m.clone(), n.clone()], cfg, stop, opts),
        Engine::Dual => residual_dual(x0, m, n, cfg, stop, opts),
    }
}

/// `x ↦ (I − P_{M_k})⋯(I − P_{M_1})x` applied cyclically.
pub fn alternate_residual_cyclic(
    x0: &PrimalVector,
    subspaces: &[Subspace],
    cfg: &SpaceConfig,
    stop: &StopRule,
    opts: &SolverOptions,
) -> Result<IterationTrace> {
    if subspaces.len() < 2 {
        return Err(Error::InvalidConfig(
            "the cyclic residual method needs at least two subspaces".into(),
        ));
    }
    for s in subspaces {
        cfg.check_len(s.ambient_dim())?;
    }
    residual_direct(x0, subspaces, cfg, stop, opts)
}

fn residual_limit(
    x0: &PrimalVector,
    subspaces: &[Subspace],
    cfg: &SpaceConfig,
    opts: &SolverOptions,
) -> Result<PrimalVector> {
    let total = sum_all(subspaces)?;
    let projected = metric_project_direct(x0, &total, cfg, opts)?.point;
    Ok(x0 - &projected)
}

fn residual_direct(
    x0: &PrimalVector,
    subspaces: &[Subspace],
    cfg: &SpaceConfig,
    stop: &StopRule,
    opts: &SolverOptions,
) -> Result<IterationTrace> {
    let limit = residual_limit(x0, subspaces, cfg, opts)?;
    drive(
        x0,
        None,
        subspaces.len(),
        cfg,
        stop,
        limit,
        LimitKind::ResidualProjectionOfX0,
        |k, p| {
            let projected = metric_project_direct(&p.x, &subspaces[k], cfg, opts)?.point;
            Ok(Point {
                x: &p.x - &projected,
                y: None,
            })
        },
        |lim, x| bregman_distance(x, lim, cfg),
    )
}

fn residual_dual(
    x0: &PrimalVector,
    m: &Subspace,
    n: &Subspace,
    cfg: &SpaceConfig,
    stop: &StopRule,
    opts: &SolverOptions,
) -> Result<IterationTrace> {
    let limit = residual_limit(x0, &[m.clone(), n.clone()], cfg, opts)?;
    let dual = cfg.dual();
    let perps = [annihilator(m), annihilator(n)];
    let y0 = duality_map(x0, cfg)?;
    drive(
        x0,
        Some(y0),
        2,
        cfg,
        stop,
        limit,
        LimitKind::ResidualProjectionOfX0,
        |k, p| {
            let y = p.y.as_ref().expect("dual engine carries y_n");
            let next = bregman_project(&y.as_point(), &perps[k], &dual, opts)?
                .point
                .as_functional();
            Ok(Point {
                x: duality_map_inverse(&next, cfg)?,
                y: Some(next),
            })
        },
        |lim, x| bregman_distance(x, lim, cfg),
    )
}

/// Largest increase `D_p(z, x_k) − D_p(z, x_l)`, `k ≥ l`, over `z = 0`, the
/// trace limit when it lies in `c`, and a fixed set of random points of `c`
/// scaled like `x_0`.
pub fn check_bregman_monotone(trace: &IterationTrace, c: &Subspace, cfg: &SpaceConfig) -> Result<f64> {
    cfg.check_len(c.ambient_dim())?;
    let mut probes = vec![PrimalVector::zeros(cfg.n())];
    if crate::subspace::contains(c, &trace.limit, 1e-8)? {
        probes.push(trace.limit.clone());
    }
    if !c.is_zero() {
        let scale = trace.iterates[0].euclidean_norm().max(1.0) / (c.rank() as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let basis = c.orthonormal_basis();
        for _ in 0..16 {
            let coeffs = nalgebra::DVector::from_fn(c.rank(), |_, _| {
                let g: f64 = StandardNormal.sample(&mut rng);
                scale * g
            });
            probes.push(PrimalVector::from(basis * coeffs));
        }
    }
    let mut worst = 0.0f64;
    for z in &probes {
        worst = worst.max(check_bregman_monotone_at(trace, z, cfg)?);
    }
    Ok(worst)
}

/// Largest increase of `k ↦ D_p(z, x_k)` along the trace.
pub fn check_bregman_monotone_at(trace: &IterationTrace, z: &PrimalVector, cfg: &SpaceConfig) -> Result<f64> {
    let mut running_min = f64::INFINITY;
    let mut worst = 0.0f64;
    for x in &trace.iterates {
        let d = bregman_distance(z, x, cfg)?;
        worst = worst.max(d - running_min);
        running_min = running_min.min(d);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(c: &[f64]) -> PrimalVector {
        PrimalVector::from_slice(c)
    }

    fn example1() -> (Subspace, Subspace) {
        (
            Subspace::coordinate(3, &[0, 1]).unwrap(),
            Subspace::coordinate(3, &[0, 2]).unwrap(),
        )
    }

    #[test]
    fn coordinate_planes_terminate_after_two_steps() {
        let cfg = SpaceConfig::new(3, 3.0, 3.0).unwrap();
        let (m, n) = example1();
        let t = alternate_bregman(
            &pv(&[1.0, 2.0, 3.0]),
            &m,
            &n,
            &cfg,
            &StopRule::default(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.stop_reason, StopReason::TolReached);
        assert!((t.last() - &pv(&[1.0, 0.0, 0.0])).euclidean_norm() < 1e-12);
        assert!((t.limit.clone().into_inner() - pv(&[1.0, 0.0, 0.0]).into_inner()).norm() < 1e-12);
        assert!((t.d_breg_to_limit[0] - 70.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn start_in_intersection_gives_constant_trace() {
        let cfg = SpaceConfig::new(3, 3.0, 3.0).unwrap();
        let (m, n) = example1();
        let t = alternate_bregman(
            &pv(&[2.0, 0.0, 0.0]),
            &m,
            &n,
            &cfg,
            &StopRule::default(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(
            check_bregman_monotone(&t, &intersect(&m, &n).unwrap(), &cfg).unwrap(),
            0.0
        );
    }

    #[test]
    fn start_in_one_subspace_still_reaches_the_other() {
        let cfg = SpaceConfig::new(3, 3.0, 3.0).unwrap();
        let (m, n) = example1();
        let t = alternate_bregman(
            &pv(&[1.0, 2.0, 0.0]),
            &m,
            &n,
            &cfg,
            &StopRule::default(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((t.last() - &pv(&[1.0, 0.0, 0.0])).euclidean_norm() < 1e-12);
    }

    #[test]
    fn residual_method_with_full_sum_goes_to_zero() {
        let cfg = SpaceConfig::new(3, 3.0, 3.0).unwrap();
        let (m, n) = example1();
        for engine in [Engine::Direct, Engine::Dual] {
            let t = alternate_residual_metric(
                &pv(&[1.0, 2.0, 3.0]),
                &m,
                &n,
                &cfg,
                &StopRule::default(),
                engine,
                &SolverOptions::default(),
            )
            .unwrap();
            assert!(t.limit.is_zero());
            assert!(t.last().euclidean_norm() < 1e-6, "{engine:?}: {:?}", t.last());
        }
    }

    #[test]
    fn orthogonal_lines_in_the_plane_finish_in_two_steps() {
        let cfg = SpaceConfig::new(2, 2.0, 2.0).unwrap();
        let m = Subspace::from_basis(2, &[vec![1.0, 1.0]]).unwrap();
        let n = Subspace::from_basis(2, &[vec![1.0, -1.0]]).unwrap();
        let t = alternate_residual_metric(
            &pv(&[0.3, 2.0]),
            &m,
            &n,
            &cfg,
            &StopRule::default(),
            Engine::Direct,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(t.iterations() <= 2);
        assert!(t.last().euclidean_norm() < 1e-14);
    }

    #[test]
    fn cyclic_orthogonal_lines_converge_in_one_sweep() {
        let cfg = SpaceConfig::new(3, 2.0, 2.0).unwrap();
        let lines: Vec<_> = (0..3).map(|i| Subspace::coordinate(3, &[i]).unwrap()).collect();
        let t = alternate_residual_cyclic(
            &pv(&[1.0, -2.0, 0.5]),
            &lines,
            &cfg,
            &StopRule::default(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(t.iterations(), 3);
        assert!(t.last().euclidean_norm() < 1e-14);
    }

    #[test]
    fn cyclic_needs_two_subspaces() {
        let cfg = SpaceConfig::new(3, 2.0, 2.0).unwrap();
        let r = alternate_residual_cyclic(
            &pv(&[1.0, 0.0, 0.0]),
            &[Subspace::whole(3)],
            &cfg,
            &StopRule::default(),
            &SolverOptions::default(),
        );
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn max_iter_with_large_gap_is_nonconvergence() {
        let cfg = SpaceConfig::new(2, 2.0, 2.0).unwrap();
        let m = Subspace::from_basis(2, &[vec![1.0, 0.0]]).unwrap();
        let n = Subspace::from_basis(2, &[vec![1.0, 0.05]]).unwrap();
        let stop = StopRule {
            tol_step: 1e-12,
            max_iter: 2,
        };
        let r = alternate_bregman(&pv(&[100.0, 0.0]), &m, &n, &cfg, &stop, &SolverOptions::default());
        assert!(matches!(r, Err(Error::NonConvergence { .. })), "{r:?}");
    }

    #[test]
    fn csv_has_fixed_header_and_one_row_per_iterate() {
        let cfg = SpaceConfig::new(3, 3.0, 3.0).unwrap();
        let (m, n) = example1();
        let t = alternate_bregman(
            &pv(&[1.0, 2.0, 3.0]),
            &m,
            &n,
            &cfg,
            &StopRule::default(),
            &SolverOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "iter,d_breg_to_limit,dist_to_limit,norm,step_gap");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,2.3333333333333"));
    }
}
