//! Linear subspaces of `ℝ^n` given by a basis.
//!
//! Rank decisions use singular values relative to the largest one with the
//! threshold [`RANK_TOL`]. Annihilators are expressed in the standard dual
//! coordinates; the `ℓ_{q*}` geometry never enters the subspace algebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::space::PrimalVector;

/// Relative singular-value threshold for rank and independence decisions.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
    orthonormal: DMatrix<f64>,
}

impl Subspace {
    /// Builds a subspace from linearly independent basis vectors.
    pub fn from_basis(ambient_dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let basis = columns_from_rows(ambient_dim, vectors)?;
        Self::from_columns(basis)
    }

    /// Builds a subspace from the columns of `basis`, which must be
    /// linearly independent.
    pub fn from_columns(basis: DMatrix<f64>) -> Result<Self> {
        let (n, r) = basis.shape();
        if n == 0 {
            return Err(Error::DegenerateBasis("ambient dimension is zero".into()));
        }
        if r == 0 {
            return Ok(Self::zero(n));
        }
        if r > n {
            return Err(Error::DegenerateBasis(format!(
                "{r} vectors cannot be independent in dimension {n}"
            )));
        }
        let mut normalized = basis.clone();
        for mut col in normalized.column_iter_mut() {
            let len = col.norm();
            if len == 0.0 || !len.is_finite() {
                return Err(Error::DegenerateBasis("zero or non-finite basis vector".into()));
            }
            col /= len;
        }
        let svd = SVD::new(normalized, true, false);
        let smallest = svd.singular_values.min();
        if smallest <= RANK_TOL {
            return Err(Error::DegenerateBasis(format!(
                "basis vectors are dependent (smallest singular value {smallest:e})"
            )));
        }
        let orthonormal = svd.u.expect("requested U");
        Ok(Self {
            ambient_dim: n,
            basis,
            orthonormal,
        })
    }

    /// The span of arbitrary (possibly dependent) vectors, stored with an
    /// orthonormal basis extracted by a rank-revealing SVD.
    pub fn span_of(ambient_dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let m = columns_from_rows(ambient_dim, vectors)?;
        Ok(Self::span_of_columns(m))
    }

    pub(crate) fn span_of_columns(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        if m.ncols() == 0 {
            return Self::zero(n);
        }
        let svd = SVD::new(m, true, false);
        let u = svd.u.expect("requested U");
        let sigma_max = svd.singular_values.max();
        if sigma_max == 0.0 {
            return Self::zero(n);
        }
        let keep: Vec<usize> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > RANK_TOL * sigma_max)
            .map(|(i, _)| i)
            .collect();
        let q = u.select_columns(keep.iter());
        Self {
            ambient_dim: n,
            basis: q.clone(),
            orthonormal: q,
        }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
            orthonormal: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn whole(ambient_dim: usize) -> Self {
        let id = DMatrix::identity(ambient_dim, ambient_dim);
        Self {
            ambient_dim,
            basis: id.clone(),
            orthonormal: id,
        }
    }

    /// Span of the standard basis vectors with the given indices.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Result<Self> {
        let mut basis = DMatrix::zeros(ambient_dim, indices.len());
        for (col, &i) in indices.iter().enumerate() {
            if i >= ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    found: i + 1,
                });
            }
            basis[(i, col)] = 1.0;
        }
        Self::from_columns(basis)
    }

    /// A uniformly oriented random subspace of the given rank.
    pub fn random<R: Rng + ?Sized>(ambient_dim: usize, rank: usize, rng: &mut R) -> Self {
        loop {
            let m = DMatrix::from_fn(ambient_dim, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
            if let Ok(s) = Self::from_columns(m) {
                return s;
            }
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    pub fn is_whole(&self) -> bool {
        self.rank() == self.ambient_dim
    }

    /// Basis vectors as columns, as supplied at construction.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Euclidean-orthonormal basis with the same span, as columns.
    pub fn orthonormal_basis(&self) -> &DMatrix<f64> {
        &self.orthonormal
    }

    pub fn basis_vectors(&self) -> Vec<PrimalVector> {
        self.basis
            .column_iter()
            .map(|c| PrimalVector::from(c.into_owned()))
            .collect()
    }

    /// Basis as a list of rows, the serialized form used in configs.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.basis.column_iter().map(|c| c.iter().copied().collect()).collect()
    }

    /// Orthogonal (Euclidean) projection onto the span.
    pub fn euclidean_projection(&self, x: &DVector<f64>) -> DVector<f64> {
        let q = &self.orthonormal;
        q * (q.transpose() * x)
    }

    /// Whether the span of `self` equals the span of `other`, each basis
    /// checked for membership in the other within `tol`.
    pub fn same_span(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient_dim == other.ambient_dim
            && self.rank() == other.rank()
            && self.is_contained_in(other, tol)
            && other.is_contained_in(self, tol)
    }

    pub fn is_contained_in(&self, other: &Subspace, tol: f64) -> bool {
        self.orthonormal.column_iter().all(|c| {
            let c = c.into_owned();
            let r = &c - other.euclidean_projection(&c);
            r.norm() <= tol * (1.0 + c.norm())
        })
    }

    fn check_same_dim(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim == other.ambient_dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: other.ambient_dim,
            })
        }
    }
}

fn columns_from_rows(n: usize, vectors: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]))
}

/// `M^⊥`: the functionals vanishing on `M`, in dual coordinates.
pub fn annihilator(m: &Subspace) -> Subspace {
    let n = m.ambient_dim;
    if m.is_zero() {
        return Subspace::whole(n);
    }
    if m.is_whole() {
        return Subspace::zero(n);
    }
    let q = &m.orthonormal;
    let complement = DMatrix::identity(n, n) - q * q.transpose();
    let eig = SymmetricEigen::new(complement);
    let keep: Vec<usize> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.5)
        .map(|(i, _)| i)
        .collect();
    debug_assert_eq!(keep.len(), n - m.rank());
    let basis = eig.eigenvectors.select_columns(keep.iter());
    Subspace {
        ambient_dim: n,
        basis: basis.clone(),
        orthonormal: basis,
    }
}

/// `M ∩ N`, from the null space of `[Q_M, −Q_N]`.
pub fn intersect(m: &Subspace, n: &Subspace) -> Result<Subspace> {
    m.check_same_dim(n)?;
    let dim = m.ambient_dim;
    let (a, b) = (m.rank(), n.rank());
    if a == 0 || b == 0 {
        return Ok(Subspace::zero(dim));
    }
    let k = a + b;
    let rows = dim.max(k);
    // Zero padding gives a square-or-tall matrix, so V is complete.
    let mut stacked = DMatrix::zeros(rows, k);
    stacked.view_mut((0, 0), (dim, a)).copy_from(&m.orthonormal);
    stacked.view_mut((0, a), (dim, b)).copy_from(&(-&n.orthonormal));
    let svd = SVD::new(stacked, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma_max = svd.singular_values.max();
    let mut directions = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= RANK_TOL * sigma_max {
            let coeffs = v_t.row(i).columns(0, a).transpose();
            directions.push(&m.orthonormal * coeffs);
        }
    }
    if directions.is_empty() {
        return Ok(Subspace::zero(dim));
    }
    Ok(Subspace::span_of_columns(DMatrix::from_columns(&directions)))
}

/// `M + N`, the span of the union of both bases.
pub fn sum(m: &Subspace, n: &Subspace) -> Result<Subspace> {
    m.check_same_dim(n)?;
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(m.rank() + n.rank());
    cols.extend(m.orthonormal.column_iter().map(|c| c.into_owned()));
    cols.extend(n.orthonormal.column_iter().map(|c| c.into_owned()));
    if cols.is_empty() {
        return Ok(Subspace::zero(m.ambient_dim));
    }
    Ok(Subspace::span_of_columns(DMatrix::from_columns(&cols)))
}

/// Sum of any number of subspaces of a common ambient space.
pub fn sum_all(subspaces: &[Subspace]) -> Result<Subspace> {
    let (first, rest) = subspaces
        .split_first()
        .ok_or_else(|| Error::InvalidConfig("sum of an empty family".into()))?;
    rest.iter().try_fold(first.clone(), |acc, s| sum(&acc, s))
}

/// Membership test: `‖x − P x‖₂ ≤ tol·(1 + ‖x‖₂)` for the Euclidean
/// projection `P` onto `M`.
pub fn contains(m: &Subspace, x: &PrimalVector, tol: f64) -> Result<bool> {
    if x.len() != m.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: m.ambient_dim,
            found: x.len(),
        });
    }
    let r = x.coords() - m.euclidean_projection(x.coords());
    Ok(r.norm() <= tol * (1.0 + x.euclidean_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    fn example2_pair() -> (Subspace, Subspace) {
        let m1 = Subspace::from_basis(3, &[vec![1.0, 0.0, 0.5], vec![1.0, 1.0, 0.99]]).unwrap();
        let m2 = Subspace::from_basis(3, &[vec![1.0, 0.0, 0.5], vec![1.0, 1.0, 1.01]]).unwrap();
        (m1, m2)
    }

    #[test]
    fn rejects_dependent_basis() {
        let r = Subspace::from_basis(3, &[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        assert!(matches!(r, Err(Error::DegenerateBasis(_))));
        let r = Subspace::from_basis(3, &[vec![1.0, 2.0]]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
        assert!(Subspace::from_basis(3, &[vec![0.0; 3]]).is_err());
    }

    #[test]
    fn orthonormal_basis_spans_the_input() {
        let (m1, _) = example2_pair();
        let q = m1.orthonormal_basis();
        assert!((q.transpose() * q - DMatrix::identity(2, 2)).norm() < 1e-12);
        let raw = Subspace::span_of_columns(m1.basis().clone());
        assert!(m1.same_span(&raw, 1e-10));
    }

    #[test]
    fn annihilator_examples() {
        assert!(annihilator(&Subspace::whole(3)).is_zero());
        assert!(annihilator(&Subspace::zero(3)).is_whole());
        let m = Subspace::from_basis(3, &[e(3, 0), e(3, 1)]).unwrap();
        let a = annihilator(&m);
        let expected = Subspace::from_basis(3, &[e(3, 2)]).unwrap();
        assert!(a.same_span(&expected, 1e-12));
        assert!(annihilator(&a).same_span(&m, 1e-12));
    }

    #[test]
    fn intersect_examples() {
        let m1 = Subspace::from_basis(3, &[e(3, 0), e(3, 1)]).unwrap();
        let m2 = Subspace::from_basis(3, &[e(3, 0), e(3, 2)]).unwrap();
        let i = intersect(&m1, &m2).unwrap();
        assert!(i.same_span(&Subspace::from_basis(3, &[e(3, 0)]).unwrap(), 1e-12));
        assert!(intersect(&m1, &m1).unwrap().same_span(&m1, 1e-12));

        let (a, b) = example2_pair();
        let i = intersect(&a, &b).unwrap();
        assert_eq!(i.rank(), 1);
        let v = Subspace::from_basis(3, &[vec![1.0, 0.0, 0.5]]).unwrap();
        assert!(i.same_span(&v, 1e-10));
        assert!(matches!(
            intersect(&m1, &Subspace::whole(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sum_examples() {
        let m1 = Subspace::from_basis(3, &[e(3, 0), e(3, 1)]).unwrap();
        let m2 = Subspace::from_basis(3, &[e(3, 0), e(3, 2)]).unwrap();
        assert!(sum(&m1, &Subspace::zero(3)).unwrap().same_span(&m1, 1e-12));
        assert!(sum(&m1, &m2).unwrap().is_whole());
        let (a, b) = example2_pair();
        assert_eq!(sum(&a, &b).unwrap().rank(), 3);
    }

    #[test]
    fn contains_examples() {
        let m1 = Subspace::from_basis(3, &[e(3, 0), e(3, 1)]).unwrap();
        assert!(contains(&m1, &PrimalVector::zeros(3), 1e-10).unwrap());
        assert!(contains(&m1, &PrimalVector::new(e(3, 1)), 1e-10).unwrap());
        assert!(!contains(&m1, &PrimalVector::new(vec![1.0, 2.0, 3.0]), 1e-10).unwrap());
        assert!(contains(&m1, &PrimalVector::zeros(2), 1e-10).is_err());
    }

    #[test]
    fn coordinate_subspaces() {
        let m = Subspace::coordinate(4, &[1, 3]).unwrap();
        assert_eq!(m.rank(), 2);
        assert!(Subspace::coordinate(2, &[2]).is_err());
        assert_eq!(m.to_rows()[1], vec![0.0, 0.0, 0.0, 1.0]);
    }
}
