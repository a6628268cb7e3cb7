mod common;

use proptest::prelude::*;
use rand::Rng;
use udbgl::graphs::{count_components, extract_labels, knn_bipartite_init, EDGE_EPS};
use udbgl::linalg::Mat;
use udbgl::solver::update_f;

use common::*;

fn zero_eigen_multiplicity(p: &[Vec<f64>]) -> usize {
    let l = bipartite_laplacian(p);
    l.symmetric_eigen().eigenvalues.iter().filter(|v| v.abs() < 1e-6).count()
}

proptest! {
    #[test]
    fn union_find_matches_dfs_and_spectrum(seed in 0u64..100_000, n in 1usize..=25, m in 1usize..=6, density in 0.05f64..0.6) {
        let mut r = rng(seed);
        let p = random_sparse(&mut r, n, m, density);
        let count = count_components(&Mat::from_rows(&p), EDGE_EPS);
        prop_assert_eq!(count.full, components_dfs(&p, EDGE_EPS));
        prop_assert_eq!(count.full, zero_eigen_multiplicity(&p));
        prop_assert!(count.sample_bearing + count.isolated_anchors == count.full);
    }

    #[test]
    fn trace_term_equals_smallest_laplacian_eigenvalues(seed in 0u64..100_000, n in 3usize..=20, m in 2usize..=6) {
        let mut r = rng(seed);
        let mut p = random_stochastic(&mut r, n, m, 0.5);
        // every anchor gets an edge so no node is isolated
        for j in 0..m {
            let i = r.random_range(0..n);
            p[i][j] += 0.2;
            let s: f64 = p[i].iter().sum();
            p[i].iter_mut().for_each(|x| *x /= s);
        }
        let c = r.random_range(1..=m.min(n));
        let emb = update_f(&Mat::from_rows(&p), c).unwrap();
        prop_assert!(emb.gram().max_abs_diff(&Mat::identity(c)) < 1e-8);
        let mut ev: Vec<f64> = bipartite_laplacian(&p).symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let partial: f64 = ev[..c].iter().sum();
        prop_assert!((emb.trace_term() - partial).abs() < 1e-6, "{} vs {}", emb.trace_term(), partial);
    }
}

#[test]
fn knn_rows_are_stochastic_and_sparse() {
    let mut r = rng(1);
    let x = Mat::from_fn(3, 40, |_, _| r.random_range(0.0..1.0));
    let a = Mat::from_fn(3, 8, |_, _| r.random_range(0.0..1.0));
    for k in 1..=8 {
        let z = knn_bipartite_init(&x, &a, k).unwrap();
        for row in z.weights().row_iter() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().filter(|&&w| w > 0.0).count() <= k);
            assert!(row.iter().all(|&w| w >= 0.0));
        }
    }
}

#[test]
fn knn_support_is_the_k_nearest_anchors() {
    let x = Mat::from_rows(&[vec![0.0, 10.0, 4.9, 7.5]]);
    let a = Mat::from_rows(&[vec![0.0, 5.0, 10.0]]);
    let one = knn_bipartite_init(&x, &a, 1).unwrap();
    assert_eq!(one.weights().as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
    let two = knn_bipartite_init(&x, &a, 2).unwrap();
    // 7.5 is equidistant from anchors 1 and 2
    assert_eq!(two.weights().row(3), &[0.0, 0.5, 0.5]);
    assert_eq!(two.weights().row(2), &[0.5, 0.5, 0.0]);
}

#[test]
fn labels_follow_components() {
    let p = Mat::from_rows(&[
        vec![0.0, 0.0, 1.0],
        vec![0.5, 0.5, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![1.0, 0.0, 0.0],
    ]);
    let labels = extract_labels(&p, EDGE_EPS, 2).unwrap();
    assert_eq!(labels.assignments(), &[0, 1, 0, 1]);
    assert!(extract_labels(&p, EDGE_EPS, 3).is_err());
}
