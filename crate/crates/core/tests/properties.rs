//! Property tests over seeded random spaces, points and subspaces.

use lqproj_core::{
    annihilator, bregman_distance, bregman_project, dual_condition_gap, dual_norm, duality_map, duality_map_inverse,
    estimate_kappa, gauge, intersect, metric_project_direct, metric_project_via_duality, norm, regularity_ratio,
    sqne_gap, sum, three_point_gap, PrimalVector, Sampler, SolverOptions, SpaceConfig, Subspace,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXPONENTS: [f64; 5] = [1.5, 2.0, 2.5, 3.0, 4.0];

fn exponent() -> impl Strategy<Value = f64> {
    prop::sample::select(EXPONENTS.to_vec())
}

fn point(n: usize) -> impl Strategy<Value = PrimalVector> {
    prop::collection::vec(-3.0f64..3.0, n).prop_map(PrimalVector::new)
}

/// A space with two points in it.
fn space_and_points() -> impl Strategy<Value = (SpaceConfig, PrimalVector, PrimalVector)> {
    (2usize..=5, exponent(), exponent()).prop_flat_map(|(n, q, p)| {
        let cfg = SpaceConfig::new(n, q, p).unwrap();
        (Just(cfg), point(n), point(n))
    })
}

/// A space, a point and a proper nonzero subspace drawn from `seed`.
fn space_point_subspace() -> impl Strategy<Value = (SpaceConfig, PrimalVector, Subspace)> {
    (2usize..=4, exponent(), any::<u64>()).prop_flat_map(|(n, q, seed)| {
        let cfg = SpaceConfig::new(n, q, q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = 1 + (seed as usize) % (n - 1);
        let m = Subspace::random(n, rank, &mut rng);
        (Just(cfg), point(n), Just(m))
    })
}

fn subspace_pair() -> impl Strategy<Value = (usize, Subspace, Subspace)> {
    (2usize..=6, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = seed as usize % (n + 1);
        let b = (seed >> 8) as usize % (n + 1);
        (n, Subspace::random(n, a, &mut rng), Subspace::random(n, b, &mut rng))
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn dist2(a: &PrimalVector, b: &PrimalVector) -> f64 {
    (a - b).euclidean_norm()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn duality_map_round_trip((cfg, x, _y) in space_and_points()) {
        let back = duality_map_inverse(&duality_map(&x, &cfg).unwrap(), &cfg).unwrap();
        prop_assert!(dist2(&back, &x) <= 1e-10 * (1.0 + x.euclidean_norm()));
    }

    #[test]
    fn duality_map_pairing_and_norm((cfg, x, _y) in space_and_points()) {
        let jx = duality_map(&x, &cfg).unwrap();
        let nx = norm(&x, &cfg).unwrap();
        prop_assert!(rel(jx.pair(&x), nx.powf(cfg.p())) <= 1e-12);
        prop_assert!(rel(dual_norm(&jx, &cfg).unwrap(), nx.powf(cfg.p() - 1.0)) <= 1e-12);
    }

    #[test]
    fn duality_map_is_the_gauge_gradient((cfg, x, h) in space_and_points()) {
        prop_assume!(x.as_slice().iter().all(|t| t.abs() > 0.05));
        let eps = 1e-6;
        let fd = (gauge(&(&x + &h.scaled(eps)), &cfg).unwrap() - gauge(&(&x - &h.scaled(eps)), &cfg).unwrap())
            / (2.0 * eps);
        let exact = duality_map(&x, &cfg).unwrap().pair(&h);
        prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "fd {fd} exact {exact}");
    }

    #[test]
    fn distance_is_nonnegative_and_dual((cfg, x, y) in space_and_points()) {
        let d = bregman_distance(&x, &y, &cfg).unwrap();
        prop_assert!(d >= 0.0);
        let jx = duality_map(&x, &cfg).unwrap().as_point();
        let jy = duality_map(&y, &cfg).unwrap().as_point();
        let dual = bregman_distance(&jy, &jx, &cfg.dual()).unwrap();
        prop_assert!(rel(d, dual) <= 1e-9, "{d} vs {dual}");
    }

    #[test]
    fn three_point_identity((cfg, x, y) in space_and_points(), t in 0.1f64..0.9) {
        let z = &x.scaled(t) + &y.scaled(1.0 - t);
        let scale = 1.0 + gauge(&x, &cfg).unwrap() + gauge(&y, &cfg).unwrap();
        prop_assert!(three_point_gap(&x, &y, &z, &cfg).unwrap().abs() <= 1e-10 * scale);
    }

    #[test]
    fn distance_is_homogeneous((cfg, x, y) in space_and_points(), lambda in 0.1f64..10.0) {
        let d = bregman_distance(&x, &y, &cfg).unwrap();
        let scaled = bregman_distance(&x.scaled(lambda), &y.scaled(lambda), &cfg).unwrap();
        prop_assert!(rel(scaled, lambda.powf(cfg.p()) * d) <= 1e-9);
    }

    #[test]
    fn projection_properties((cfg, x, m) in space_point_subspace(), lambda in 0.2f64..5.0, t in -2.0f64..2.0) {
        let opts = SolverOptions::default();
        let proj = bregman_project(&x, &m, &cfg, &opts).unwrap();
        let basis = m.orthonormal_basis();
        // First-order condition: j(Π x) − j(x) annihilates M.
        let diff = (&duality_map(&proj.point, &cfg).unwrap() - &duality_map(&x, &cfg).unwrap()).into_inner();
        let jx_scale = dual_norm(&duality_map(&x, &cfg).unwrap(), &cfg).unwrap();
        prop_assert!((basis.transpose() * diff).norm() <= 1e-9 * (1.0 + jx_scale));
        // Norm contraction.
        prop_assert!(norm(&proj.point, &cfg).unwrap() <= norm(&x, &cfg).unwrap() * (1.0 + 1e-9) + 1e-12);
        // Homogeneity.
        let scaled = bregman_project(&x.scaled(lambda), &m, &cfg, &opts).unwrap().point;
        prop_assert!(dist2(&scaled, &proj.point.scaled(lambda)) <= 1e-7 * (1.0 + lambda * x.euclidean_norm()));
        // SQNE equality for a point of M.
        let z = PrimalVector::from(basis.column(0) * t);
        let scale = 1.0 + gauge(&x, &cfg).unwrap() + gauge(&z, &cfg).unwrap();
        prop_assert!(sqne_gap(&z, &x, &m, &cfg).unwrap().abs() <= 1e-9 * scale);
    }

    #[test]
    fn metric_projection_through_duality((cfg, x, m) in space_point_subspace()) {
        let opts = SolverOptions::default();
        let direct = metric_project_direct(&x, &m, &cfg, &opts).unwrap().point;
        let via = metric_project_via_duality(&x, &m, &cfg, &opts).unwrap();
        prop_assert!(dist2(&direct, &via) <= 1e-7 * (1.0 + x.euclidean_norm()));
    }

    #[test]
    fn dual_condition_identity((cfg, x, m) in space_point_subspace()) {
        let scale = 1.0 + gauge(&x, &cfg).unwrap();
        prop_assert!(dual_condition_gap(&x, &m, &cfg).unwrap().abs() <= 1e-8 * scale);
    }

    #[test]
    fn hilbert_projection_is_orthogonal(x in point(4), seed in any::<u64>()) {
        let cfg = SpaceConfig::new(4, 2.0, 2.0).unwrap();
        let m = Subspace::random(4, 1 + seed as usize % 3, &mut ChaCha8Rng::seed_from_u64(seed));
        let proj = bregman_project(&x, &m, &cfg, &SolverOptions::default()).unwrap().point;
        let orth = PrimalVector::from(m.euclidean_projection(x.coords()));
        prop_assert!(dist2(&proj, &orth) <= 1e-12 * (1.0 + x.euclidean_norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn double_annihilator((_n, m, _k) in subspace_pair()) {
        prop_assert!(annihilator(&annihilator(&m)).same_span(&m, 1e-10));
    }

    #[test]
    fn dimension_formula((_n, m, k) in subspace_pair()) {
        let s = sum(&m, &k).unwrap();
        let i = intersect(&m, &k).unwrap();
        prop_assert_eq!(s.rank() + i.rank(), m.rank() + k.rank());
    }

    #[test]
    fn annihilator_of_intersection_is_sum((_n, m, k) in subspace_pair()) {
        let lhs = annihilator(&intersect(&annihilator(&m), &annihilator(&k)).unwrap());
        prop_assert!(lhs.same_span(&sum(&m, &k).unwrap(), 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn regularity_ratio_is_scale_invariant(q in exponent(), x in point(3), seed in any::<u64>(), lambda in 0.01f64..100.0) {
        let cfg = SpaceConfig::new(3, q, q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (Subspace::random(3, 2, &mut rng), Subspace::random(3, 2, &mut rng));
        let a = regularity_ratio(&x, &m, &n, &cfg);
        let b = regularity_ratio(&x.scaled(lambda), &m, &n, &cfg);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a - b).abs() <= 1e-6 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn kappa_hat_is_at_least_one(q in exponent(), seed in any::<u64>()) {
        let cfg = SpaceConfig::new(3, q, q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (Subspace::random(3, 1 + seed as usize % 2, &mut rng), Subspace::random(3, 2, &mut rng));
        for sampler in [Sampler::SphereUniform, Sampler::BregmanBall, Sampler::NearIntersection] {
            let r = estimate_kappa(&m, &n, &cfg, &sampler, 64, seed).unwrap();
            prop_assert!(r.kappa_hat >= 1.0);
        }
    }
}

#[test]
fn hilbert_kappa_stabilizes() {
    let cfg = SpaceConfig::new(3, 2.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let (m, n) = (Subspace::random(3, 2, &mut rng), Subspace::random(3, 1, &mut rng));
        let r = estimate_kappa(&m, &n, &cfg, &Sampler::SphereUniform, 100_000, 5).unwrap();
        assert!(!r.diverging, "{r:?}");
    }
}
