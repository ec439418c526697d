//! Checks on the two worked subspace pairs beyond the acceptance suite.

use lqproj_cli::reproduce::{coordinate_planes, example2_ratio_lower_bound, near_parallel_planes, v_lambda};
use lqproj_core::{
    alternate_bregman, check_bregman_monotone_at, estimate_kappa, metric_regularity_ratio, regularity_ratio,
    PrimalVector, Sampler, SolverOptions, SpaceConfig, StopRule,
};

#[test]
fn directed_refinement_towards_the_diagonal_diverges() {
    let cfg = SpaceConfig::new(3, 3.0, 3.0).unwrap();
    let (m1, m2) = near_parallel_planes();
    let sampler = Sampler::Directed {
        anchor: vec![1.0, 0.0, 0.5],
        target: vec![1.0, 1.0, 1.0],
        lambdas: vec![1e-1, 1e-2, 1e-3, 1e-4],
    };
    let r = estimate_kappa(&m1, &m2, &cfg, &sampler, 4, 0).unwrap();
    assert!(r.diverging, "{r:?}");
    assert!(r.kappa_hat >= example2_ratio_lower_bound(1e-3), "{r:?}");
}

#[test]
fn ratio_at_one_hundredth_beats_the_closed_form_bound() {
    let cfg = SpaceConfig::new(3, 3.0, 3.0).unwrap();
    let (m1, m2) = near_parallel_planes();
    let r = regularity_ratio(&v_lambda(0.01), &m1, &m2, &cfg).unwrap();
    assert!(r >= example2_ratio_lower_bound(0.01), "{r}");
}

#[test]
fn alternating_trace_is_monotone_towards_the_common_line() {
    let cfg = SpaceConfig::new(3, 3.0, 3.0).unwrap();
    let (m1, m2) = near_parallel_planes();
    let stop = StopRule {
        tol_step: 1e-14,
        max_iter: 400,
    };
    let trace = alternate_bregman(&v_lambda(0.5), &m1, &m2, &cfg, &stop, &SolverOptions::default()).unwrap();
    let z = PrimalVector::from_slice(&[1.0, 0.0, 0.5]);
    assert!(check_bregman_monotone_at(&trace, &z, &cfg).unwrap() <= 1e-9);
}

#[test]
fn metric_ratio_of_the_coordinate_planes() {
    let cfg = SpaceConfig::new(3, 3.0, 3.0).unwrap();
    let (m1, m2) = coordinate_planes();
    let r = metric_regularity_ratio(&PrimalVector::from_slice(&[1.0, 2.0, 3.0]), &m1, &m2, &cfg).unwrap();
    assert!((r - 35f64.cbrt() / 3.0).abs() < 1e-9, "{r}");
}
