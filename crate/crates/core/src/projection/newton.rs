//! Damped Newton iteration for smooth convex objectives in a few variables.

use nalgebra::{DMatrix, DVector};

use super::SolverOptions;

pub(crate) trait SmoothConvex {
    fn value(&self, c: &DVector<f64>) -> f64;
    fn gradient_hessian(&self, c: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>);
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub c: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Minimizes `f` from `c0` until `‖∇f‖₂ ≤ tol_abs`.
///
/// Steps solve the Hessian system regularized by `hessian_floor·I`; when the
/// factorization fails or the step is not a descent direction the negative
/// gradient is used instead. Backtracking accepts a step once it passes the
/// Armijo test or shrinks the gradient norm by a comparable fraction.
pub(crate) fn minimize<F: SmoothConvex>(f: &F, c0: DVector<f64>, opts: &SolverOptions, tol_abs: f64) -> NewtonOutcome {
    let dim = c0.len();
    let mut c = c0;
    let mut fc = f.value(&c);
    let (mut g, mut h) = f.gradient_hessian(&c);
    let mut residual = g.norm();

    for it in 0..opts.max_iter {
        if residual <= tol_abs {
            return NewtonOutcome {
                c,
                iterations: it,
                residual,
                converged: true,
            };
        }
        if !residual.is_finite() {
            break;
        }

        let regularized = &h + DMatrix::identity(dim, dim) * opts.hessian_floor;
        let newton = regularized
            .cholesky()
            .map(|ch| ch.solve(&(-&g)))
            .filter(|d| d.iter().all(|v| v.is_finite()) && g.dot(d) < 0.0);

        let mut accepted = None;
        for direction in newton.into_iter().chain(std::iter::once(-&g)) {
            if let Some(step) = line_search(f, &c, fc, &g, residual, &direction, opts) {
                accepted = Some(step);
                break;
            }
        }

        match accepted {
            Some((c_new, f_new, g_new, h_new)) => {
                c = c_new;
                fc = f_new;
                residual = g_new.norm();
                g = g_new;
                h = h_new;
            }
            None => {
                return NewtonOutcome {
                    c,
                    iterations: it + 1,
                    residual,
                    converged: residual <= tol_abs,
                };
            }
        }
    }

    NewtonOutcome {
        c,
        iterations: opts.max_iter,
        residual,
        converged: residual <= tol_abs,
    }
}

type Step = (DVector<f64>, f64, DVector<f64>, DMatrix<f64>);

fn line_search<F: SmoothConvex>(
    f: &F,
    c: &DVector<f64>,
    fc: f64,
    g: &DVector<f64>,
    residual: f64,
    direction: &DVector<f64>,
    opts: &SolverOptions,
) -> Option<Step> {
    let slope = g.dot(direction);
    let mut alpha = 1.0;
    for _ in 0..80 {
        let trial = c + direction * alpha;
        let f_trial = f.value(&trial);
        if f_trial.is_finite() {
            let (g_trial, h_trial) = f.gradient_hessian(&trial);
            let armijo = f_trial <= fc + opts.armijo * alpha * slope && f_trial < fc;
            // Near the minimum the decrease of f drowns in its rounding error;
            // the gradient norm still measures progress there.
            let shrinks = g_trial.norm() <= (1.0 - opts.armijo * alpha) * residual;
            if armijo || shrinks {
                return Some((trial, f_trial, g_trial, h_trial));
            }
        }
        alpha *= opts.backtrack;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quartic;

    impl SmoothConvex for Quartic {
        fn value(&self, c: &DVector<f64>) -> f64 {
            (c[0] - 1.0).powi(4) + 2.0 * (c[1] + 0.5).powi(2) + c[0] * c[1]
        }
        fn gradient_hessian(&self, c: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
            let g = DVector::from_vec(vec![4.0 * (c[0] - 1.0).powi(3) + c[1], 4.0 * (c[1] + 0.5) + c[0]]);
            let h = DMatrix::from_row_slice(2, 2, &[12.0 * (c[0] - 1.0).powi(2), 1.0, 1.0, 4.0]);
            (g, h)
        }
    }

    #[test]
    fn converges_on_a_convex_quartic() {
        let out = minimize(
            &Quartic,
            DVector::from_vec(vec![5.0, 5.0]),
            &SolverOptions::default(),
            1e-12,
        );
        assert!(out.converged, "{out:?}");
        let (g, _) = Quartic.gradient_hessian(&out.c);
        assert!(g.norm() <= 1e-12);
    }

    #[test]
    fn falls_back_to_gradient_steps_when_hessian_is_useless() {
        struct Flat;
        impl SmoothConvex for Flat {
            fn value(&self, c: &DVector<f64>) -> f64 {
                c.norm_squared()
            }
            fn gradient_hessian(&self, c: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
                (c * 2.0, DMatrix::from_element(2, 2, f64::NAN))
            }
        }
        let out = minimize(
            &Flat,
            DVector::from_vec(vec![1.0, -2.0]),
            &SolverOptions::default(),
            1e-10,
        );
        assert!(out.converged);
        assert!(out.c.norm() < 1e-10);
    }
}
