//! Fixtures shared by the benchmarks.

use lqproj_core::{PrimalVector, SpaceConfig, Subspace};

/// Two planes of `ℝ⁴` meeting in the line spanned by `(1, 1, 1, 1)`.
pub fn planes_sharing_a_line() -> (Subspace, Subspace) {
    let u = vec![1.0, 1.0, 1.0, 1.0];
    let m = Subspace::from_basis(4, &[u.clone(), vec![1.0, -2.0, 0.5, 0.0]]).expect("independent rows");
    let n = Subspace::from_basis(4, &[u, vec![0.0, 1.0, -1.0, 3.0]]).expect("independent rows");
    (m, n)
}

pub fn start_point() -> PrimalVector {
    PrimalVector::from_slice(&[0.7, -1.3, 2.1, 0.4])
}

pub fn space(q: f64, p: f64) -> SpaceConfig {
    SpaceConfig::new(4, q, p).expect("exponents above 1")
}
