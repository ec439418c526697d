//! Geometry of `ℓ^n_q`: norms, duality mappings and the Bregman distance.
//!
//! The Bregman distance generated by `φ(x) = (1/p)‖x‖_q^p` is
//!
//! ```text
//! D_p(x, y) = φ(x) − φ(y) − ⟨j_p(y), x − y⟩,    j_p = ∇φ.
//! ```
//!
//! Evaluating that expression literally loses every digit once `x` and `y`
//! are close, which is exactly the regime alternating projections live in.
//! Writing `s(x) = Σ|x_i|^q` and `F(s) = s^{p/q}/p`, the same quantity splits
//! into a one-dimensional Bregman term of `F` plus a weighted sum of scalar
//! Bregman terms of `|t|^q/q`:
//!
//! ```text
//! D_p(x, y) = [F(s_x) − F(s_y) − F'(s_y)(s_x − s_y)] + s_y^{p/q − 1} Σ_i b_q(x_i, y_i)
//! ```
//!
//! Every piece is then computed from relative increments with `ln_1p`,
//! `exp_m1` and a binomial series, so the result keeps full relative accuracy
//! down to the underflow range.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Absolute slack (scaled by `1 + φ(x) + φ(y)`) below zero that is still
/// treated as a rounding artefact of a zero Bregman distance.
pub const BREGMAN_NEGATIVE_SLACK: f64 = 1e-12;

/// Smallest magnitude fed into `|t|^{q−2}` when `q < 2`.
pub(crate) const HESSIAN_COORD_FLOOR: f64 = 1e-30;

/// Ambient dimension, norm exponent `q` and gauge exponent `p` of the space
/// `ℓ^n_q` equipped with the Bregman distance `D_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceConfig {
    n: usize,
    q: f64,
    p: f64,
    p_star: f64,
    rho: f64,
    sigma: f64,
}

impl SpaceConfig {
    pub fn new(n: usize, q: f64, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::InvalidConfig(format!("norm exponent q = {q} must exceed 1")));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidConfig(format!("gauge exponent p = {p} must exceed 1")));
        }
        Ok(Self {
            n,
            q,
            p,
            p_star: conjugate(p),
            rho: q.max(2.0),
            sigma: q.min(2.0),
        })
    }

    /// The space with gauge `p = q`, which always satisfies `σ ≤ p ≤ ρ`.
    pub fn with_default_gauge(n: usize, q: f64) -> Result<Self> {
        Self::new(n, q, q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn q_star(&self) -> f64 {
        conjugate(self.q)
    }

    /// Power type of uniform convexity, `max(2, q)`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Power type of uniform smoothness, `min(2, q)`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// True when `σ ≤ p ≤ ρ`, the range in which linear rates are available.
    pub fn gauge_in_power_range(&self) -> bool {
        self.sigma <= self.p && self.p <= self.rho
    }

    /// The dual space `ℓ^n_{q*}` with gauge `p*`. Its own dual is `self`.
    pub fn dual(&self) -> SpaceConfig {
        SpaceConfig::new(self.n, self.q_star(), self.p_star).expect("conjugate exponents of valid exponents are valid")
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n,
                found: len,
            })
        }
    }
}

fn conjugate(e: f64) -> f64 {
    e / (e - 1.0)
}

macro_rules! coordinate_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(DVector<f64>);

        impl $name {
            pub fn new(coords: Vec<f64>) -> Self {
                Self(DVector::from_vec(coords))
            }

            pub fn from_slice(coords: &[f64]) -> Self {
                Self(DVector::from_column_slice(coords))
            }

            pub fn zeros(n: usize) -> Self {
                Self(DVector::zeros(n))
            }

            pub fn coords(&self) -> &DVector<f64> {
                &self.0
            }

            pub fn into_inner(self) -> DVector<f64> {
                self.0
            }

            pub fn as_slice(&self) -> &[f64] {
                self.0.as_slice()
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn euclidean_norm(&self) -> f64 {
                self.0.norm()
            }

            pub fn scaled(&self, factor: f64) -> Self {
                Self(&self.0 * factor)
            }

            pub fn is_zero(&self) -> bool {
                self.0.iter().all(|&c| c == 0.0)
            }
        }

        impl From<DVector<f64>> for $name {
            fn from(v: DVector<f64>) -> Self {
                Self(v)
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self::new(v)
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: Self) -> $name {
                $name(&self.0 + &rhs.0)
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: Self) -> $name {
                $name(&self.0 - &rhs.0)
            }
        }

        impl Mul<f64> for &$name {
            type Output = $name;
            fn mul(self, rhs: f64) -> $name {
                $name(&self.0 * rhs)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                serializer.collect_seq(self.0.iter())
            }
        }
    };
}

coordinate_vector!(
    /// A point of the primal space `X = ℓ^n_q`.
    PrimalVector
);

coordinate_vector!(
    /// A functional in `X* = ℓ^n_{q*}`, in the standard dual coordinates.
    DualVector
);

impl PrimalVector {
    /// Reads the coordinates as a functional. Used when `X` is itself the
    /// dual of the space an iteration runs in.
    pub fn as_functional(&self) -> DualVector {
        DualVector(self.0.clone())
    }
}

impl DualVector {
    /// `X*` is an `ℓ_{q*}` space in its own right; this views the functional
    /// as a point of that space so it can be projected with
    /// [`SpaceConfig::dual`].
    pub fn as_point(&self) -> PrimalVector {
        PrimalVector(self.0.clone())
    }

    /// The pairing `⟨self, x⟩`.
    pub fn pair(&self, x: &PrimalVector) -> f64 {
        self.0.dot(&x.0)
    }
}

/// `‖x‖_q`.
pub fn norm(x: &PrimalVector, cfg: &SpaceConfig) -> Result<f64> {
    cfg.check_len(x.len())?;
    Ok(lq_norm(x.as_slice(), cfg.q))
}

/// `‖f‖_{q*}` of a functional.
pub fn dual_norm(f: &DualVector, cfg: &SpaceConfig) -> Result<f64> {
    cfg.check_len(f.len())?;
    Ok(lq_norm(f.as_slice(), cfg.q_star()))
}

/// `φ(x) = (1/p)‖x‖_q^p`.
pub fn gauge(x: &PrimalVector, cfg: &SpaceConfig) -> Result<f64> {
    cfg.check_len(x.len())?;
    Ok(gauge_raw(x.as_slice(), cfg.q, cfg.p))
}

/// The duality mapping `j_p(x) = ∇((1/p)‖·‖_q^p)(x)`, with `j_p(0) = 0`.
pub fn duality_map(x: &PrimalVector, cfg: &SpaceConfig) -> Result<DualVector> {
    cfg.check_len(x.len())?;
    Ok(DualVector(duality_map_raw(x.coords(), cfg.q, cfg.p)))
}

/// `j_{p*}` on `ℓ_{q*}`, the inverse of [`duality_map`].
pub fn duality_map_inverse(f: &DualVector, cfg: &SpaceConfig) -> Result<PrimalVector> {
    cfg.check_len(f.len())?;
    Ok(PrimalVector(duality_map_raw(f.coords(), cfg.q_star(), cfg.p_star)))
}

/// `D_p(x, y) = (1/p)‖x‖^p − (1/p)‖y‖^p − ⟨j_p(y), x − y⟩`.
///
/// Values in `[−slack, 0)` are rounded to zero; anything further below zero
/// is reported as [`Error::NumericalInconsistency`].
pub fn bregman_distance(x: &PrimalVector, y: &PrimalVector, cfg: &SpaceConfig) -> Result<f64> {
    cfg.check_len(x.len())?;
    cfg.check_len(y.len())?;
    let value = bregman_raw(x.as_slice(), y.as_slice(), cfg.q, cfg.p);
    if value >= 0.0 {
        return Ok(value);
    }
    let scale = 1.0 + gauge_raw(x.as_slice(), cfg.q, cfg.p) + gauge_raw(y.as_slice(), cfg.q, cfg.p);
    if value >= -BREGMAN_NEGATIVE_SLACK * scale {
        Ok(0.0)
    } else {
        Err(Error::NumericalInconsistency(value))
    }
}

/// Residual of the three-point identity,
/// `D(x,y) − D(x,z) − D(z,y) − ⟨j_p(z) − j_p(y), x − z⟩`.
pub fn three_point_gap(x: &PrimalVector, y: &PrimalVector, z: &PrimalVector, cfg: &SpaceConfig) -> Result<f64> {
    let dxy = bregman_distance(x, y, cfg)?;
    let dxz = bregman_distance(x, z, cfg)?;
    let dzy = bregman_distance(z, y, cfg)?;
    let jz = duality_map(z, cfg)?;
    let jy = duality_map(y, cfg)?;
    let cross = (&jz - &jy).pair(&(x - z));
    Ok(dxy - dxz - dzy - cross)
}

// ---------------------------------------------------------------------------
// Slice-level kernels shared with the projection solvers.

/// `|t|^e`, through `powi` when `e` is an integer.
#[inline]
pub(crate) fn abs_pow(t: f64, e: f64) -> f64 {
    let a = t.abs();
    if e == e.trunc() && e.abs() <= 64.0 {
        a.powi(e as i32)
    } else {
        a.powf(e)
    }
}

/// `sign(t)|t|^e`, zero at `t = 0`.
#[inline]
pub(crate) fn signed_pow(t: f64, e: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum() * abs_pow(t, e)
    }
}

pub(crate) fn power_sum(x: &[f64], q: f64) -> f64 {
    x.iter().map(|&t| abs_pow(t, q)).sum()
}

pub(crate) fn lq_norm(x: &[f64], q: f64) -> f64 {
    let s = power_sum(x, q);
    if s == 0.0 {
        0.0
    } else {
        s.powf(1.0 / q)
    }
}

pub(crate) fn gauge_raw(x: &[f64], q: f64, p: f64) -> f64 {
    let s = power_sum(x, q);
    if s == 0.0 {
        0.0
    } else {
        s.powf(p / q) / p
    }
}

pub(crate) fn duality_map_raw(x: &DVector<f64>, q: f64, p: f64) -> DVector<f64> {
    let s = power_sum(x.as_slice(), q);
    if s == 0.0 {
        return DVector::zeros(x.len());
    }
    // ‖x‖^{p−q} = s^{p/q − 1}
    let scale = s.powf(p / q - 1.0);
    x.map(|t| scale * signed_pow(t, q - 1.0))
}

/// Hessian of `(1/p)‖·‖_q^p` at `y`:
/// `s^{r−2} [ (p−q) g gᵀ + (q−1) s diag(|y_i|^{q−2}) ]`, `r = p/q`,
/// `g_i = sign(y_i)|y_i|^{q−1}`.
pub(crate) fn gauge_hessian(y: &DVector<f64>, q: f64, p: f64) -> DMatrix<f64> {
    let n = y.len();
    let s = power_sum(y.as_slice(), q);
    if s == 0.0 {
        return if p == 2.0 && q == 2.0 {
            DMatrix::identity(n, n)
        } else {
            DMatrix::zeros(n, n)
        };
    }
    let r = p / q;
    let g = y.map(|t| signed_pow(t, q - 1.0));
    let mut h = &g * g.transpose() * (p - q);
    for i in 0..n {
        let a = if q < 2.0 {
            y[i].abs().max(HESSIAN_COORD_FLOOR)
        } else {
            y[i].abs()
        };
        h[(i, i)] += (q - 1.0) * s * abs_pow(a, q - 2.0);
    }
    h * s.powf(r - 2.0)
}

/// `h_r(u) = ((1+u)^r − 1 − r u) / r` for `u ≥ −1`, accurate for small `u`.
pub(crate) fn relative_excess(u: f64, r: f64) -> f64 {
    if r == 1.0 || u == 0.0 {
        return 0.0;
    }
    if u.abs() <= 0.125 {
        // Σ_{k≥2} C(r,k) u^k / r
        let mut term = (r - 1.0) * u * u / 2.0;
        let mut sum = term;
        for k in 2..60 {
            let kf = k as f64;
            term *= (r - kf) / (kf + 1.0) * u;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let base = (1.0 + u).max(0.0);
        (base.powf(r) - 1.0 - r * u) / r
    }
}

/// `|b|^q − |a|^q` without cancellation when `|a| ≈ |b|`.
pub(crate) fn power_difference(a: f64, b: f64, q: f64) -> f64 {
    let (aa, ab) = (a.abs(), b.abs());
    if aa == 0.0 {
        return abs_pow(ab, q);
    }
    if ab == 0.0 {
        return -abs_pow(aa, q);
    }
    abs_pow(aa, q) * (q * ((ab - aa) / aa).ln_1p()).exp_m1()
}

/// Scalar Bregman distance of `ψ(t) = |t|^q / q`:
/// `ψ(a) − ψ(c) − ψ'(c)(a − c)`.
pub(crate) fn scalar_bregman(a: f64, c: f64, q: f64) -> f64 {
    if c == 0.0 {
        return abs_pow(a, q) / q;
    }
    if a == 0.0 {
        return (1.0 - 1.0 / q) * abs_pow(c, q);
    }
    let (aa, ac) = (a.abs(), c.abs());
    if a.signum() != c.signum() {
        return abs_pow(aa, q) / q + abs_pow(ac, q - 1.0) * aa + (1.0 - 1.0 / q) * abs_pow(ac, q);
    }
    abs_pow(ac, q) * relative_excess((aa - ac) / ac, q)
}

/// Unclamped `D_p(x, y)` on raw coordinates.
pub(crate) fn bregman_raw(x: &[f64], y: &[f64], q: f64, p: f64) -> f64 {
    let s_y = power_sum(y, q);
    if s_y == 0.0 {
        return gauge_raw(x, q, p);
    }
    let r = p / q;
    let separable: f64 = x.iter().zip(y).map(|(&a, &c)| scalar_bregman(a, c, q)).sum();
    let separable = separable * s_y.powf(r - 1.0);
    if r == 1.0 {
        return separable;
    }
    let delta: f64 = x.iter().zip(y).map(|(&a, &c)| power_difference(c, a, q)).sum();
    let w = (delta / s_y).max(-1.0);
    s_y.powf(r) / q * relative_excess(w, r) + separable
}
