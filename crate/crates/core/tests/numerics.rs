mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use udbgl::linalg::{symmetric_eigen, Mat};
use udbgl::numerics::{
    kmeans, project_simplex, simplex_violation, solve_simplex_qp, truncated_svd, AlmOptions, QuadraticForm, SimplexQp,
};

use common::*;

fn random_psd(rng: &mut rand_chacha::ChaCha8Rng, d: usize, ridge: f64) -> Mat<f64> {
    let g = Mat::from_fn(d + 1, d, |_, _| rng.random_range(-1.0..1.0));
    let mut h = g.t_matmul(&g);
    for i in 0..d {
        h[(i, i)] += ridge;
    }
    h
}

fn to_na(m: &Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

proptest! {
    #[test]
    fn projection_matches_kkt_enumeration(y in prop::collection::vec(-3.0f64..3.0, 1..=8)) {
        let x = project_simplex(&y).unwrap();
        let oracle = simplex_projection_kkt(&y);
        for (a, b) in x.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent_and_feasible(y in prop::collection::vec(-5.0f64..5.0, 1..=12)) {
        let x = project_simplex(&y).unwrap();
        prop_assert!(simplex_violation(&x) < 1e-12);
        let again = project_simplex(&x).unwrap();
        for (a, b) in x.iter().zip(&again) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_translation_invariant(y in prop::collection::vec(-2.0f64..2.0, 1..=8), t in -4.0f64..4.0) {
        let shifted: Vec<f64> = y.iter().map(|v| v + t).collect();
        let a = project_simplex(&y).unwrap();
        let b = project_simplex(&shifted).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn qp_matches_active_set_oracle(seed in 0u64..10_000, d in 1usize..=4) {
        let mut r = rng(seed);
        let h = random_psd(&mut r, d, 0.05);
        let f: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
        let form = QuadraticForm::new(h.clone()).unwrap();
        let qp = SimplexQp::new(&form, &f).unwrap();
        let sol = solve_simplex_qp(&qp, &vec![1.0 / d as f64; d], &AlmOptions::default()).unwrap();
        let hn = to_na(&h);
        let oracle = simplex_qp_active_set(&hn, &f);
        prop_assert!(simplex_violation(&sol.x) < 1e-12);
        for (a, b) in sol.x.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 2e-3, "{:?} vs {:?}", sol.x, oracle);
        }
        prop_assert!((sol.objective - qp_value(&hn, &f, &oracle)).abs() < 1e-6);
    }
}

#[test]
fn qp_grid_oracle_agrees_on_small_instances() {
    let mut r = rng(7);
    for _ in 0..20 {
        let d = r.random_range(2..=3);
        let h = random_psd(&mut r, d, 0.1);
        let f: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        let form = QuadraticForm::new(h.clone()).unwrap();
        let qp = SimplexQp::new(&form, &f).unwrap();
        let sol = solve_simplex_qp(&qp, &vec![1.0 / d as f64; d], &AlmOptions::default()).unwrap();
        let (gv, _) = simplex_qp_grid(&to_na(&h), &f, 400);
        assert!(sol.objective <= gv + 1e-12, "solver {} above lattice minimum {gv}", sol.objective);
        assert!(gv - sol.objective < 1e-3);
    }
}

#[test]
fn eigen_matches_nalgebra_and_jacobi() {
    let mut r = rng(11);
    for n in [1usize, 2, 3, 5, 8, 13] {
        let a = Mat::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let s = Mat::from_fn(n, n, |i, j| a[(i, j)] + a[(j, i)]);
        let ours = symmetric_eigen(&s);
        let mut na: Vec<f64> = to_na(&s).symmetric_eigen().eigenvalues.iter().copied().collect();
        na.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let jac = jacobi_eigenvalues(&to_na(&s));
        for ((a, b), c) in ours.values.iter().zip(&na).zip(&jac) {
            assert!((a - b).abs() < 1e-10 && (a - c).abs() < 1e-10);
        }
        // residual ‖S v − λ v‖
        for k in 0..n {
            let v = ours.vectors.col(k);
            let sv = s.mul_vec(&v);
            let res = sv.iter().zip(&v).map(|(x, y)| (x - ours.values[k] * y).abs()).fold(0.0, f64::max);
            assert!(res < 1e-10);
        }
    }
}

#[test]
fn truncated_svd_matches_nalgebra() {
    let mut r = rng(5);
    for (n, m, c) in [(10, 4, 2), (30, 8, 3), (6, 6, 6), (20, 5, 1)] {
        let a = Mat::from_fn(n, m, |_, _| r.random_range(0.0..1.0));
        let ours = truncated_svd(&a, c).unwrap();
        let mut sv: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for k in 0..c {
            assert!((ours.sigma[k] - sv[k]).abs() < 1e-9, "{:?} vs {:?}", ours.sigma, sv);
        }
        let ut = ours.u.t_matmul(&ours.u);
        let vt = ours.v.t_matmul(&ours.v);
        assert!(ut.max_abs_diff(&Mat::identity(c)) < 1e-10);
        assert!(vt.max_abs_diff(&Mat::identity(c)) < 1e-10);
        // A v_k = σ_k u_k
        for k in 0..c {
            let av = a.mul_vec(&ours.v.col(k));
            let u = ours.u.col(k);
            for (x, y) in av.iter().zip(&u) {
                assert!((x - ours.sigma[k] * y).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn kmeans_two_clusters_never_beats_exhaustive_optimum() {
    let mut r = rng(3);
    for trial in 0..30 {
        let n = r.random_range(3..=9);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(0.0..5.0), r.random_range(0.0..5.0)]).collect();
        let mat = Mat::from_fn(2, n, |d, j| pts[j][d]);
        let km = kmeans(&mat, 2, trial, 100).unwrap();
        let best = best_two_partition_sse(&pts);
        assert!(km.sse >= best - 1e-9);
        // Lloyd fixpoint: every point is at its nearest center
        for (j, p) in pts.iter().enumerate() {
            let dist = |k: usize| (0..2).map(|d| (p[d] - km.centers[(d, k)]).powi(2)).sum::<f64>();
            assert!(dist(km.assignments[j]) <= dist(1 - km.assignments[j]) + 1e-12);
        }
    }
}

#[test]
fn kmeans_finds_optimum_on_separated_pairs() {
    let mut r = rng(9);
    for trial in 0..20 {
        let mut pts = Vec::new();
        for base in [0.0, 100.0] {
            for _ in 0..4 {
                pts.push(vec![base + r.random_range(0.0..1.0), r.random_range(0.0..1.0)]);
            }
        }
        let mat = Mat::from_fn(2, pts.len(), |d, j| pts[j][d]);
        let km = kmeans(&mat, 2, trial, 100).unwrap();
        assert!((km.sse - best_two_partition_sse(&pts)).abs() < 1e-9);
    }
}

#[test]
fn kmeans_sse_trace_is_non_increasing() {
    let mut r = rng(21);
    let mat = Mat::from_fn(3, 200, |_, _| r.random_range(0.0..1.0));
    for seed in 0..5 {
        let km = kmeans(&mat, 7, seed, 100).unwrap();
        for w in km.sse_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }
}
