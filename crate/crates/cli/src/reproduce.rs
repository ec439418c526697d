//! Reproducers for the two coordinate and near-parallel plane examples.

use lqproj_core::{
    bregman_distance, bregman_project, intersect, regularity_ratio, PrimalVector, Result, SolverOptions, SpaceConfig,
    Subspace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub computed: f64,
    pub abs_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ExampleReport {
    pub checks: Vec<Check>,
    pub overall_pass: bool,
}

impl ExampleReport {
    fn record(&mut self, name: impl Into<String>, expected: f64, computed: f64, pass: bool) {
        self.checks.push(Check {
            name: name.into(),
            expected,
            computed,
            abs_err: (computed - expected).abs(),
            pass,
        });
        self.overall_pass = self.checks.iter().all(|c| c.pass);
    }

    /// `|computed − expected| ≤ rel·|expected| + abs`.
    fn close(&mut self, name: impl Into<String>, expected: f64, computed: f64, rel: f64, abs: f64) {
        let pass = (computed - expected).abs() <= rel * expected.abs() + abs;
        self.record(name, expected, computed, pass);
    }

    /// `computed ≤ bound + slack`.
    fn at_most(&mut self, name: impl Into<String>, bound: f64, computed: f64, slack: f64) {
        self.record(name, bound, computed, computed <= bound + slack);
    }

    fn at_least(&mut self, name: impl Into<String>, bound: f64, computed: f64, slack: f64) {
        self.record(name, bound, computed, computed >= bound - slack);
    }

    /// One line per check followed by an overall verdict.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<48} expected {:>24.16e} computed {:>24.16e} abs_err {:.3e}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.expected,
                c.computed,
                c.abs_err
            ));
        }
        out.push_str(if self.overall_pass {
            "overall: PASS\n"
        } else {
            "overall: FAIL\n"
        });
        out
    }
}

/// The coordinate planes `span{e1, e2}` and `span{e1, e3}` of `ℝ³`.
pub fn coordinate_planes() -> (Subspace, Subspace) {
    (
        Subspace::coordinate(3, &[0, 1]).expect("valid indices"),
        Subspace::coordinate(3, &[0, 2]).expect("valid indices"),
    )
}

struct Example1Eval {
    proj_err: f64,
    d: [f64; 3],
    expected: [f64; 3],
    den_zero: bool,
}

fn example1_at(
    v: &PrimalVector,
    cfg: &SpaceConfig,
    subs: &[Subspace; 3],
    opts: &SolverOptions,
) -> Result<Example1Eval> {
    let q = cfg.q();
    let c = v.as_slice();
    let f = 1.0 - 1.0 / q;
    let (ay, az) = (c[1].abs().powf(q), c[2].abs().powf(q));
    let formulas = [[c[0], c[1], 0.0], [c[0], 0.0, c[2]], [c[0], 0.0, 0.0]];
    let expected = [f * az, f * ay, f * (ay + az)];
    let mut proj_err = 0.0f64;
    let mut d = [0.0; 3];
    for k in 0..3 {
        let r = bregman_project(v, &subs[k], cfg, opts)?;
        let want = PrimalVector::from_slice(&formulas[k]);
        proj_err = proj_err.max((&r.point - &want).coords().amax());
        d[k] = r.objective;
    }
    Ok(Example1Eval {
        proj_err,
        d,
        expected,
        den_zero: expected[0].max(expected[1]) <= 1e-14 * (1.0 + expected[2]),
    })
}

/// Checks the coordinate-plane pair in `ℓ³_q` with `p = q`: projections
/// against `(x, y, 0)`, `(x, 0, z)`, `(x, 0, 0)`, distances against
/// `(1 − 1/q)|z|^q`, `(1 − 1/q)|y|^q`, `(1 − 1/q)(|y|^q + |z|^q)`, and the
/// ratio bound 2, at `v = (1, 2, 3)`, `v = e1` and `samples` points drawn
/// uniformly from `[−2, 2]³`.
pub fn run_example1(q: f64, samples: usize, seed: u64) -> Result<ExampleReport> {
    let cfg = SpaceConfig::with_default_gauge(3, q)?;
    let opts = SolverOptions::default();
    let (m1, m2) = coordinate_planes();
    let meet = intersect(&m1, &m2)?;
    let subs = [m1, m2, meet];
    let mut report = ExampleReport {
        overall_pass: true,
        ..Default::default()
    };

    let v = PrimalVector::from_slice(&[1.0, 2.0, 3.0]);
    let e = example1_at(&v, &cfg, &subs, &opts)?;
    report.close("v=(1,2,3): projections match formulas", 0.0, e.proj_err, 0.0, 1e-8);
    for (k, label) in ["D(M1,v)", "D(M2,v)", "D(M1∩M2,v)"].iter().enumerate() {
        report.close(format!("v=(1,2,3): {label}"), e.expected[k], e.d[k], 1e-8, 0.0);
    }
    let ratio = e.d[2] / e.d[0].max(e.d[1]);
    report.close(
        "v=(1,2,3): ratio",
        e.expected[2] / e.expected[0].max(e.expected[1]),
        ratio,
        1e-8,
        0.0,
    );
    report.at_most("v=(1,2,3): ratio ≤ 2", 2.0, ratio, 1e-10);

    let e1 = example1_at(&PrimalVector::from_slice(&[1.0, 0.0, 0.0]), &cfg, &subs, &opts)?;
    report.close(
        "v=e1: all distances vanish",
        0.0,
        e1.d.iter().fold(0.0, |a: f64, b| a.max(*b)),
        0.0,
        1e-14,
    );

    if samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut proj_err = 0.0f64;
        let mut rel_err = 0.0f64;
        let mut min_slack = f64::INFINITY;
        let mut max_ratio = 0.0f64;
        let mut all_close = true;
        for _ in 0..samples {
            let v = PrimalVector::new((0..3).map(|_| rng.random_range(-2.0..2.0)).collect());
            let e = example1_at(&v, &cfg, &subs, &opts)?;
            proj_err = proj_err.max(e.proj_err);
            for k in 0..3 {
                let err = (e.d[k] - e.expected[k]).abs();
                all_close &= err <= 1e-8 * e.expected[k] + 1e-15;
                if e.expected[k] > 0.0 {
                    rel_err = rel_err.max(err / e.expected[k]);
                }
            }
            if !e.den_zero {
                let den = e.d[0].max(e.d[1]);
                min_slack = min_slack.min(2.0 * den - e.d[2]);
                max_ratio = max_ratio.max(e.d[2] / den);
            }
        }
        report.close(
            format!("{samples} samples: projections match formulas"),
            0.0,
            proj_err,
            0.0,
            1e-8,
        );
        report.record(
            format!("{samples} samples: max relative distance error"),
            0.0,
            rel_err,
            all_close,
        );
        report.at_least(
            format!("{samples} samples: min slack of ratio bound"),
            0.0,
            min_slack,
            1e-10,
        );
        report.at_most(format!("{samples} samples: max ratio ≤ 2"), 2.0, max_ratio, 1e-10);
    }
    Ok(report)
}

/// The near-parallel planes through `(1, 0, 1/2)` in `ℓ³_3`.
pub fn near_parallel_planes() -> (Subspace, Subspace) {
    let m1 = Subspace::from_basis(3, &[vec![1.0, 0.0, 0.5], vec![1.0, 1.0, 0.99]]).expect("independent basis");
    let m2 = Subspace::from_basis(3, &[vec![1.0, 0.0, 0.5], vec![1.0, 1.0, 1.01]]).expect("independent basis");
    (m1, m2)
}

/// `v_λ = (1 − λ)(1, 0, 1/2) + λ(1, 1, 1)`.
pub fn v_lambda(lambda: f64) -> PrimalVector {
    PrimalVector::from_slice(&[1.0, lambda, 0.5 + 0.5 * lambda])
}

/// `D_3(t(1, 0, 1/2), v_λ)` as a polynomial in `t` and `λ`.
pub fn example2_objective(t: f64, l: f64) -> f64 {
    let h = l / 2.0 + 0.5;
    2.0 * l.powi(3) / 3.0 + 3.0 * t.powi(3) / 8.0 - t - h.powi(3) / 3.0 - h * h * (-l / 2.0 + t / 2.0 - 0.5) + 2.0 / 3.0
}

/// Minimizer of [`example2_objective`] over `t ≥ 0`.
pub fn example2_t_star(l: f64) -> f64 {
    (l * l + 2.0 * l + 9.0).sqrt() / 3.0
}

/// Closed form of `D_3(Π_{M1∩M2} v_λ, v_λ)`.
pub fn example2_intersection_distance(l: f64) -> f64 {
    let s = (l * l + 2.0 * l + 9.0).sqrt();
    3.0 * l.powi(3) / 4.0 - l * l * s / 36.0 + l * l / 4.0 - l * s / 18.0 + l / 4.0 - s / 4.0 + 0.75
}

/// Upper bounds on `D_3(Π_{M1} v_λ, v_λ)` and `D_3(Π_{M2} v_λ, v_λ)`.
pub fn example2_plane_bounds(l: f64) -> (f64, f64) {
    let l3 = l.powi(3);
    (148.0 * l3 / 352947.0, 152.0 * l3 / 397953.0)
}

/// Closed-form lower bound on the regularity ratio at `v_λ`.
pub fn example2_ratio_lower_bound(l: f64) -> f64 {
    let s = (l * l + 2.0 * l + 9.0).sqrt();
    let num = 27.0 * l.powi(3) - l * l * s + 9.0 * l * l - 2.0 * l * s + 9.0 * l - 9.0 * s + 27.0;
    117649.0 * num / (1776.0 * l.powi(3))
}

/// Checks the near-parallel plane pair at each `λ` of the grid, and that
/// the regularity ratio strictly increases as `λ` decreases through it.
pub fn run_example2(lambda_grid: &[f64]) -> Result<ExampleReport> {
    let cfg = SpaceConfig::new(3, 3.0, 3.0)?;
    let opts = SolverOptions::default();
    let (m1, m2) = near_parallel_planes();
    let meet = intersect(&m1, &m2)?;
    let anchor = PrimalVector::from_slice(&[1.0, 0.0, 0.5]);
    let mut report = ExampleReport {
        overall_pass: true,
        ..Default::default()
    };

    let mut grid: Vec<f64> = lambda_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut ratios = Vec::with_capacity(grid.len());
    for &l in &grid {
        if !(l > 0.0 && l <= 1.0) {
            return Err(lqproj_core::Error::InvalidConfig(format!("lambda {l} outside (0, 1]")));
        }
        let v = v_lambda(l);
        let t_star = example2_t_star(l);

        let mut poly_err = 0.0f64;
        for t in [0.0, 0.5, 1.0, t_star, 2.0] {
            let d = bregman_distance(&anchor.scaled(t), &v, &cfg)?;
            let want = example2_objective(t, l);
            poly_err = poly_err.max((d - want).abs() / want.abs().max(1.0));
        }
        report.close(
            format!("λ={l}: objective matches polynomial"),
            0.0,
            poly_err,
            0.0,
            1e-10,
        );

        let pi = bregman_project(&v, &meet, &cfg, &opts)?;
        report.close(
            format!("λ={l}: optimal coefficient t"),
            t_star,
            pi.point.as_slice()[0],
            0.0,
            1e-8,
        );
        let d_int = example2_intersection_distance(l);
        report.close(format!("λ={l}: D(M1∩M2, v_λ)"), d_int, pi.objective, 1e-8, 1e-15);

        let (b1, b2) = example2_plane_bounds(l);
        let d1 = bregman_project(&v, &m1, &cfg, &opts)?.objective;
        let d2 = bregman_project(&v, &m2, &cfg, &opts)?.objective;
        report.at_most(format!("λ={l}: D(M1, v_λ) ≤ bound"), b1, d1, 1e-12);
        report.at_most(format!("λ={l}: D(M2, v_λ) ≤ bound"), b2, d2, 1e-12);

        let ratio = regularity_ratio(&v, &m1, &m2, &cfg)?;
        report.at_least(
            format!("λ={l}: ratio ≥ lower bound"),
            example2_ratio_lower_bound(l),
            ratio,
            0.0,
        );
        ratios.push((l, ratio));
    }
    for pair in ratios.windows(2) {
        let ((l0, r0), (l1, r1)) = (pair[0], pair[1]);
        report.record(format!("ratio increases from λ={l0} to λ={l1}"), r0, r1, r1 > r0);
    }
    Ok(report)
}
