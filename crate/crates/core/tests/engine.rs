use std::sync::Arc;

use proptest::prelude::*;

use purchase_timing::lcp::{
    complementarity_residual, march, psor_step, thomas_solve, Grid1D, NodeCoefficients, ObstacleProblem, ObstacleSense,
    PsorSettings, Scheme, Tridiagonal, UpperBoundary,
};

/// Dense Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn to_dense(t: &Tridiagonal) -> Vec<Vec<f64>> {
    let n = t.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = t.diag[i];
        if i > 0 {
            a[i][i - 1] = t.lower[i];
        }
        if i + 1 < n {
            a[i][i + 1] = t.upper[i];
        }
    }
    a
}

fn dominant_system() -> impl Strategy<Value = (Tridiagonal, Vec<f64>)> {
    (
        prop::collection::vec(-1.0f64..1.0, 100),
        prop::collection::vec(-1.0f64..1.0, 100),
        prop::collection::vec(0.1f64..2.0, 100),
        prop::collection::vec(-5.0f64..5.0, 100),
    )
        .prop_map(|(lower, upper, extra, rhs)| {
            let diag = (0..100).map(|i| lower[i].abs() + upper[i].abs() + extra[i]).collect();
            (Tridiagonal { lower, diag, upper }, rhs)
        })
}

#[derive(Debug, Clone)]
struct Market {
    sigma: f64,
    r: f64,
    lambda: f64,
}

fn market() -> impl Strategy<Value = Market> {
    (0.15f64..0.6, 0.0f64..0.2, 0.0f64..0.3).prop_map(|(sigma, r, lambda)| Market { sigma, r, lambda })
}

fn coefficients(m: &Market) -> impl Fn(f64, f64) -> NodeCoefficients + Send + Sync + '_ {
    move |_t, s| NodeCoefficients {
        diffusion: 0.5 * m.sigma * m.sigma * s * s,
        drift: (m.r + m.lambda) * s,
        discount: m.r + m.lambda,
        jump: m.lambda,
        source: 0.0,
    }
}

const S_MAX: f64 = 20.0;
const T_END: f64 = 1.0;

fn grid() -> Arc<Grid1D> {
    Arc::new(Grid1D::uniform(S_MAX, 50, T_END, 50).unwrap())
}

#[test]
fn zero_data_gives_a_zero_surface() {
    let m = Market {
        sigma: 0.3,
        r: 0.05,
        lambda: 0.1,
    };
    let g = grid();
    let out = march(&ObstacleProblem::new(
        g.clone(),
        coefficients(&m),
        vec![0.0; g.ns()],
        |_| 0.0,
    ))
    .unwrap();
    assert_eq!(out.surface.max_abs(), 0.0);
}

#[test]
fn american_put_steps_are_complementary() {
    let m = Market {
        sigma: 0.3,
        r: 0.08,
        lambda: 0.05,
    };
    let g = grid();
    let strike = 5.0;
    let payoff: Vec<f64> = g.s().iter().map(|&s| (strike - s).max(0.0)).collect();
    let obstacle = vec![payoff.clone(); g.nt()];
    let p = ObstacleProblem::new(g.clone(), coefficients(&m), payoff.clone(), move |_| strike)
        .with_obstacle(&obstacle, ObstacleSense::Floor);
    let out = march(&p).unwrap();
    assert!(out.stats.max_residual <= 1e-8, "{}", out.stats.max_residual);
    for slice in &out.surface.values {
        for (u, o) in slice.iter().zip(&payoff) {
            assert!(*u >= o - 1e-12);
        }
    }
    assert!(!out.region.intervals[0].is_empty());
}

#[test]
fn psor_without_a_binding_obstacle_is_the_linear_solve() {
    let n = 40;
    let a = Tridiagonal {
        lower: vec![-1.0; n],
        diag: vec![3.0; n],
        upper: vec![-1.0; n],
    };
    let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
    let free = thomas_solve(&a, &rhs).unwrap();
    let settings = PsorSettings::default();
    let out = psor_step(
        &a,
        &rhs,
        &vec![f64::NEG_INFINITY; n],
        ObstacleSense::Floor,
        &settings,
        None,
    )
    .unwrap();
    assert_eq!(out.iterations, 0);
    assert!(out.values.iter().zip(&free).all(|(x, y)| (x - y).abs() < 1e-14));

    let obstacle = vec![0.0; n];
    let out = psor_step(
        &a,
        &rhs,
        &obstacle,
        ObstacleSense::Floor,
        &settings,
        Some(&vec![0.0; n]),
    )
    .unwrap();
    assert!(complementarity_residual(&a, &rhs, &out.values, &obstacle, ObstacleSense::Floor) <= settings.tol);
    assert!(out.active.iter().any(|&b| b) && out.active.iter().any(|&b| !b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thomas_matches_dense_elimination((a, rhs) in dominant_system()) {
        let x = thomas_solve(&a, &rhs).unwrap();
        let oracle = dense_solve(to_dense(&a), rhs.clone());
        for (u, v) in x.iter().zip(&oracle) {
            prop_assert!((u - v).abs() <= 1e-10 * (1.0 + v.abs()));
        }
        let residual = a.mul_vec(&x).iter().zip(&rhs).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max);
        prop_assert!(residual <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn comparison_principle(
        m in market(),
        strike in 2.0f64..12.0,
        bumps in prop::collection::vec(0.0f64..1.0, 51),
        source_bump in 0.0f64..0.5,
        with_obstacle in any::<bool>(),
    ) {
        let g = grid();
        let low: Vec<f64> = g.s().iter().map(|&s| (strike - s).max(0.0)).collect();
        let high: Vec<f64> = low.iter().zip(&bumps).map(|(v, b)| v + b).collect();
        let src = vec![vec![source_bump; g.ns()]; g.nt()];
        let obstacle = vec![low.clone(); g.nt()];
        let solve = |terminal: Vec<f64>, lower0: f64, source: Option<&[Vec<f64>]>| {
            let top = terminal[terminal.len() - 1];
            let mut p = ObstacleProblem::new(g.clone(), coefficients(&m), terminal, move |_| lower0)
                .with_scheme(Scheme::Implicit)
                .with_upper(UpperBoundary::Dirichlet(Box::new(move |_| top)));
            if let Some(s) = source {
                p = p.with_source(s);
            }
            if with_obstacle {
                p = p.with_obstacle(&obstacle, ObstacleSense::Floor);
            }
            march(&p).unwrap().surface
        };
        let u = solve(low.clone(), strike, None);
        let v = solve(high.clone(), strike + bumps[0], Some(&src));
        for (a, b) in u.values.iter().zip(&v.values) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!(x <= &(y + 1e-7), "{x} > {y}");
            }
        }
    }

    #[test]
    fn unconstrained_march_is_linear(
        m in market(),
        k1 in 1.0f64..15.0,
        k2 in 1.0f64..15.0,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let g = grid();
        let df = |t: f64| (-(m.r) * (T_END - t)).exp();
        let f1: Vec<f64> = g.s().iter().map(|&s| (k1 - s).max(0.0)).collect();
        let f2: Vec<f64> = g.s().iter().map(|&s| (s - k2).max(0.0)).collect();
        let mix: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| a * x + b * y).collect();
        let run = |terminal: Vec<f64>, lower: f64| {
            march(&ObstacleProblem::new(g.clone(), coefficients(&m), terminal, move |t| lower * df(t)))
                .unwrap()
                .surface
        };
        let u1 = run(f1, k1);
        let u2 = run(f2, 0.0);
        let um = run(mix, a * k1);
        for k in 0..g.nt() {
            for i in 0..g.ns() {
                let want = a * u1.values[k][i] + b * u2.values[k][i];
                prop_assert!((um.values[k][i] - want).abs() <= 1e-10 * (1.0 + want.abs()));
            }
        }
    }
}
