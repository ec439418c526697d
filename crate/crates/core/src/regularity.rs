//! Sampled linear Bregman regularity constants, metric regularity ratios and
//! the dual regularity condition of the residual method.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::projection::{bregman_distance_to, metric_project_direct, SolverOptions};
use crate::space::{bregman_distance, duality_map, gauge, norm, PrimalVector, SpaceConfig};
use crate::subspace::{annihilator, intersect, sum, Subspace};

/// Denominators below this fraction of the point's gauge count as zero.
pub const INTERSECTION_TOL: f64 = 1e-14;

/// A running supremum that grows by more than this factor is flagged.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

/// Offset range of [`Sampler::NearIntersection`].
pub const NEAR_OFFSETS: (f64, f64) = (1e-5, 1.0);

const FIRST_DOUBLING: usize = 64;
const BINS_PER_DECADE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Gaussian directions normalized to the unit `ℓ_q` sphere.
    SphereUniform,
    /// Points of `{x : D_p(x, 0) ≤ 1}` with uniformly distributed radius
    /// fraction `U^{1/n}`.
    BregmanBall,
    /// Points `z + t·v` with `z` a unit vector of `M∩N`, `v` a unit direction
    /// and `t` log-uniform in [`NEAR_OFFSETS`]; uniform on the sphere when
    /// `M∩N = {0}`. The sphere rarely comes close to a low-dimensional
    /// intersection, where the ratio can peak.
    NearIntersection,
    /// The points `(1 − λ)·anchor + λ·target` for each listed `λ`, in order.
    Directed {
        anchor: Vec<f64>,
        target: Vec<f64>,
        lambdas: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    /// Sample supremum of the ratio, never below 1.
    pub kappa_hat: f64,
    pub worst_point: PrimalVector,
    /// Points whose ratio was evaluated.
    pub samples: usize,
    /// Points rejected as lying in `M∩N`.
    #[serde(skip)]
    pub rejected: usize,
    /// `(lower bin edge, count)` over quarter-decade bins.
    #[serde(rename = "histogram")]
    pub ratio_histogram: Vec<(f64, usize)>,
    /// Heuristic flag: the supremum kept growing under refinement.
    pub diverging: bool,
}

fn check_pair(m: &Subspace, n: &Subspace, cfg: &SpaceConfig) -> Result<()> {
    cfg.check_len(m.ambient_dim())?;
    cfg.check_len(n.ambient_dim())
}

/// `D_p(M∩N, x) / max{D_p(M, x), D_p(N, x)}`.
pub fn regularity_ratio(x: &PrimalVector, m: &Subspace, n: &Subspace, cfg: &SpaceConfig) -> Result<f64> {
    let meet = intersect(m, n)?;
    ratio_with_meet(x, m, n, &meet, cfg, &SolverOptions::default())
}

fn ratio_with_meet(
    x: &PrimalVector,
    m: &Subspace,
    n: &Subspace,
    meet: &Subspace,
    cfg: &SpaceConfig,
    opts: &SolverOptions,
) -> Result<f64> {
    check_pair(m, n, cfg)?;
    let dm = bregman_distance_to(m, x, cfg, opts)?;
    let dn = bregman_distance_to(n, x, cfg, opts)?;
    let den = dm.max(dn);
    if den <= INTERSECTION_TOL * gauge(x, cfg)? || den == 0.0 {
        return Err(Error::PointInIntersection(den));
    }
    Ok(bregman_distance_to(meet, x, cfg, opts)? / den)
}

/// `dist(x, M∩N) / max{dist(x, M), dist(x, N)}` in the `ℓ_q` norm.
pub fn metric_regularity_ratio(x: &PrimalVector, m: &Subspace, n: &Subspace, cfg: &SpaceConfig) -> Result<f64> {
    check_pair(m, n, cfg)?;
    let opts = SolverOptions::default();
    let meet = intersect(m, n)?;
    let dm = metric_project_direct(x, m, cfg, &opts)?.objective;
    let dn = metric_project_direct(x, n, cfg, &opts)?.objective;
    let den = dm.max(dn);
    if den <= INTERSECTION_TOL * norm(x, cfg)? || den == 0.0 {
        return Err(Error::PointInIntersection(den));
    }
    Ok(metric_project_direct(x, &meet, cfg, &opts)?.objective / den)
}

fn gaussian(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(dim, |_, _| rng.sample(StandardNormal));
        if g.iter().any(|&t| t != 0.0) {
            return g;
        }
    }
}

fn on_unit_sphere(v: DVector<f64>, cfg: &SpaceConfig) -> PrimalVector {
    let v = PrimalVector::from(v);
    let len = norm(&v, cfg).expect("sample has ambient length");
    v.scaled(1.0 / len)
}

fn sample_point(sampler: &Sampler, meet: &Subspace, cfg: &SpaceConfig, rng: &mut ChaCha8Rng) -> PrimalVector {
    let n = cfg.n();
    let direction = on_unit_sphere(gaussian(n, rng), cfg);
    match sampler {
        Sampler::SphereUniform => direction,
        Sampler::BregmanBall => {
            // D_p(x, 0) = (1/p)‖x‖^p, so the ball has radius p^{1/p}.
            let radius = cfg.p().powf(1.0 / cfg.p());
            let u: f64 = rng.random();
            direction.scaled(radius * u.powf(1.0 / n as f64))
        }
        Sampler::NearIntersection if meet.is_zero() => direction,
        Sampler::NearIntersection => {
            let z = on_unit_sphere(meet.orthonormal_basis() * gaussian(meet.rank(), rng), cfg);
            let (lo, hi) = (NEAR_OFFSETS.0.ln(), NEAR_OFFSETS.1.ln());
            let t = rng.random_range(lo..=hi).exp();
            &z + &direction.scaled(t)
        }
        Sampler::Directed { .. } => unreachable!("directed points are not random"),
    }
}

/// Sample supremum of [`regularity_ratio`] over `n_samples` seeded points.
///
/// Sampling runs in parallel; sample `i` draws from its own ChaCha stream so
/// the report depends only on `seed`. `diverging` is set when the running
/// supremum grows by more than a factor 10 between successive doublings of
/// the sample count (from 64 on), or, for directed samplers, when the ratio
/// grows by more than a factor 10 along the refinement.
pub fn estimate_kappa(
    m: &Subspace,
    n: &Subspace,
    cfg: &SpaceConfig,
    sampler: &Sampler,
    n_samples: usize,
    seed: u64,
) -> Result<RegularityReport> {
    check_pair(m, n, cfg)?;
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
    }
    let meet = intersect(m, n)?;
    let opts = SolverOptions::default();

    let points: Vec<PrimalVector> = match sampler {
        Sampler::Directed {
            anchor,
            target,
            lambdas,
        } => {
            cfg.check_len(anchor.len())?;
            cfg.check_len(target.len())?;
            lambdas
                .iter()
                .map(|&l| PrimalVector::new(anchor.iter().zip(target).map(|(a, b)| (1.0 - l) * a + l * b).collect()))
                .collect()
        }
        _ => (0..n_samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                sample_point(sampler, &meet, cfg, &mut rng)
            })
            .collect(),
    };

    let ratios: Vec<Option<f64>> = points
        .par_iter()
        .map(|x| match ratio_with_meet(x, m, n, &meet, cfg, &opts) {
            Ok(r) => Ok(Some(r)),
            Err(Error::PointInIntersection(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let mut kappa = f64::NEG_INFINITY;
    let mut worst = PrimalVector::zeros(cfg.n());
    let mut accepted = Vec::with_capacity(ratios.len());
    let mut diverging = false;
    let mut checkpoint = FIRST_DOUBLING;
    let mut sup_at_checkpoint = None;
    for (i, (r, x)) in ratios.iter().zip(&points).enumerate() {
        if let Some(r) = *r {
            accepted.push(r);
            if r > kappa {
                kappa = r;
                worst = x.clone();
            }
        }
        if i + 1 == checkpoint {
            if let Some(prev) = sup_at_checkpoint {
                if kappa > DIVERGENCE_FACTOR * prev {
                    diverging = true;
                }
            }
            if kappa.is_finite() {
                sup_at_checkpoint = Some(kappa);
            }
            checkpoint *= 2;
        }
    }
    if let Sampler::Directed { .. } = sampler {
        if let Some(&first) = accepted.first() {
            diverging |= kappa > DIVERGENCE_FACTOR * first;
        }
    }

    Ok(RegularityReport {
        kappa_hat: kappa.max(1.0),
        worst_point: worst,
        samples: accepted.len(),
        rejected: ratios.len() - accepted.len(),
        ratio_histogram: histogram(&accepted),
        diverging,
    })
}

fn histogram(ratios: &[f64]) -> Vec<(f64, usize)> {
    let mut bins: Vec<(i64, usize)> = Vec::new();
    for &r in ratios {
        let k = (r.max(1.0).log10() * BINS_PER_DECADE).floor() as i64;
        match bins.binary_search_by_key(&k, |b| b.0) {
            Ok(pos) => bins[pos].1 += 1,
            Err(pos) => bins.insert(pos, (k, 1)),
        }
    }
    bins.into_iter()
        .map(|(k, c)| (10f64.powf(k as f64 / BINS_PER_DECADE), c))
        .collect()
}

/// Slack of the dual regularity condition at `x`:
/// `((κ−1)/κ)‖x‖^p + (1/κ) d(x, M+N)^p − min{d(x, M)^p, d(x, N)^p}`.
pub fn dual_regularity_check(
    x: &PrimalVector,
    m: &Subspace,
    n: &Subspace,
    cfg: &SpaceConfig,
    kappa: f64,
) -> Result<f64> {
    if kappa.is_nan() || kappa < 1.0 {
        return Err(Error::InvalidConfig(format!("kappa must be at least 1, got {kappa}")));
    }
    let d = DualTerms::new(x, m, n, cfg)?;
    Ok((kappa - 1.0) / kappa * d.norm_p + d.sum_p / kappa - d.min_p)
}

/// Smallest `κ` for which [`dual_regularity_check`] is nonnegative at `x`:
/// `(‖x‖^p − d(x, M+N)^p) / (‖x‖^p − min{d(x, M)^p, d(x, N)^p})`.
pub fn dual_kappa_at(x: &PrimalVector, m: &Subspace, n: &Subspace, cfg: &SpaceConfig) -> Result<f64> {
    let d = DualTerms::new(x, m, n, cfg)?;
    let den = d.norm_p - d.min_p;
    if den <= INTERSECTION_TOL * d.norm_p || den == 0.0 {
        return Err(Error::PointInIntersection(den));
    }
    Ok((d.norm_p - d.sum_p) / den)
}

struct DualTerms {
    norm_p: f64,
    min_p: f64,
    sum_p: f64,
}

impl DualTerms {
    fn new(x: &PrimalVector, m: &Subspace, n: &Subspace, cfg: &SpaceConfig) -> Result<Self> {
        check_pair(m, n, cfg)?;
        let opts = SolverOptions::default();
        let p = cfg.p();
        let dist_p = |s: &Subspace| -> Result<f64> { Ok(metric_project_direct(x, s, cfg, &opts)?.objective.powf(p)) };
        let total = sum(m, n)?;
        Ok(Self {
            norm_p: norm(x, cfg)?.powf(p),
            min_p: dist_p(m)?.min(dist_p(n)?),
            sum_p: dist_p(&total)?,
        })
    }
}

/// `D_{p*}(M^⊥, j_p x) − ((1/p)‖x‖^p − (1/p) d(x, M)^p)`, zero in exact
/// arithmetic.
pub fn dual_condition_gap(x: &PrimalVector, m: &Subspace, cfg: &SpaceConfig) -> Result<f64> {
    cfg.check_len(m.ambient_dim())?;
    let opts = SolverOptions::default();
    let dual = cfg.dual();
    let jx = duality_map(x, cfg)?.as_point();
    let lhs = bregman_distance_to(&annihilator(m), &jx, &dual, &opts)?;
    let p = cfg.p();
    let d = metric_project_direct(x, m, cfg, &opts)?.objective;
    Ok(lhs - (norm(x, cfg)?.powf(p) - d.powf(p)) / p)
}

/// `D_p(z, Π) − (D_p(z, x) − D_p(Π, x))` for `Π` the Bregman projection of
/// `x` onto `m` and `z ∈ m`; zero for subspaces.
pub fn sqne_gap(z: &PrimalVector, x: &PrimalVector, m: &Subspace, cfg: &SpaceConfig) -> Result<f64> {
    let proj = crate::projection::bregman_project(x, m, cfg, &SolverOptions::default())?;
    Ok(bregman_distance(z, &proj.point, cfg)? - (bregman_distance(z, x, cfg)? - proj.objective))
}
