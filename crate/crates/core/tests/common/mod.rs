//! Independent reference implementations used by the integration and
//! acceptance tests. None of them call into the solver's numerics.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Euclidean projection onto the simplex by trying every support set and
/// keeping the one whose KKT conditions hold.
pub fn simplex_projection_kkt(y: &[f64]) -> Vec<f64> {
    let d = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << d) {
        let support: Vec<usize> = (0..d).filter(|&i| mask & (1 << i) != 0).collect();
        let tau = (support.iter().map(|&i| y[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let ok_in = support.iter().all(|&i| y[i] - tau >= -1e-14);
        let ok_out = (0..d).filter(|i| mask & (1 << i) == 0).all(|j| y[j] - tau <= 1e-14);
        if ok_in && ok_out {
            let x: Vec<f64> = (0..d).map(|i| if mask & (1 << i) != 0 { (y[i] - tau).max(0.0) } else { 0.0 }).collect();
            let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
                best = Some((dist, x));
            }
        }
    }
    best.expect("some support satisfies KKT").1
}

/// `xᵀHx − fᵀx`.
pub fn qp_value(h: &DMatrix<f64>, f: &[f64], x: &[f64]) -> f64 {
    let xv = DVector::from_column_slice(x);
    (xv.transpose() * h * &xv)[(0, 0)] - f.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
}

/// Minimizes `xᵀHx − fᵀx` over the simplex by enumerating active sets and
/// solving each equality-constrained KKT system densely.
pub fn simplex_qp_active_set(h: &DMatrix<f64>, f: &[f64]) -> Vec<f64> {
    let d = f.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << d) {
        let s: Vec<usize> = (0..d).filter(|&i| mask & (1 << i) != 0).collect();
        let k = s.len();
        // [2H_SS 1; 1ᵀ 0] [x; λ] = [f_S; 1]
        let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        for (a, &i) in s.iter().enumerate() {
            for (b, &j) in s.iter().enumerate() {
                kkt[(a, b)] = 2.0 * h[(i, j)];
            }
            kkt[(a, k)] = 1.0;
            kkt[(k, a)] = 1.0;
            rhs[a] = f[i];
        }
        rhs[k] = 1.0;
        let Some(sol) = kkt.clone().lu().solve(&rhs) else { continue };
        if (&kkt * &sol - &rhs).amax() > 1e-9 {
            continue;
        }
        if s.iter().enumerate().any(|(a, _)| sol[a] < -1e-12) {
            continue;
        }
        let mut x = vec![0.0; d];
        for (a, &i) in s.iter().enumerate() {
            x[i] = sol[a].max(0.0);
        }
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
        let val = qp_value(h, f, &x);
        if best.as_ref().is_none_or(|(bv, _)| val < *bv) {
            best = Some((val, x));
        }
    }
    best.expect("a vertex is always feasible").1
}

/// Brute-force minimum of the QP on a simplex lattice with spacing `1/steps`
/// (dimensions up to 4).
pub fn simplex_qp_grid(h: &DMatrix<f64>, f: &[f64], steps: usize) -> (f64, Vec<f64>) {
    let d = f.len();
    let mut best = (f64::INFINITY, vec![0.0; d]);
    let mut counts = vec![0usize; d];
    fn rec(
        i: usize,
        left: usize,
        counts: &mut Vec<usize>,
        steps: usize,
        h: &DMatrix<f64>,
        f: &[f64],
        best: &mut (f64, Vec<f64>),
    ) {
        let d = counts.len();
        if i == d - 1 {
            counts[i] = left;
            let x: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();
            let v = qp_value(h, f, &x);
            if v < best.0 {
                *best = (v, x);
            }
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, steps, h, f, best);
        }
    }
    rec(0, steps, &mut counts, steps, h, f, &mut best);
    best
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].powi(2)).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Normalized Laplacian `D^{-1/2}(D − S)D^{-1/2}` of the block graph
/// `S = [0 P; Pᵀ 0]`, with `D^{-1/2} = 0` on zero-degree nodes.
pub fn bipartite_laplacian(p: &[Vec<f64>]) -> DMatrix<f64> {
    let n = p.len();
    let m = p.first().map_or(0, Vec::len);
    let t = n + m;
    let mut s = DMatrix::<f64>::zeros(t, t);
    for i in 0..n {
        for j in 0..m {
            s[(i, n + j)] = p[i][j];
            s[(n + j, i)] = p[i][j];
        }
    }
    let deg: Vec<f64> = (0..t).map(|i| s.row(i).sum()).collect();
    let inv: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    DMatrix::from_fn(t, t, |i, j| {
        let dij = if i == j { deg[i] } else { 0.0 };
        (dij - s[(i, j)]) * inv[i] * inv[j]
    })
}

/// Graph components by depth-first search on `p_ij > eps`.
pub fn components_dfs(p: &[Vec<f64>], eps: f64) -> usize {
    let n = p.len();
    let m = p.first().map_or(0, Vec::len);
    let mut seen = vec![false; n + m];
    let mut count = 0;
    for start in 0..n + m {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            let nbrs: Vec<usize> = if u < n {
                (0..m).filter(|&j| p[u][j] > eps).map(|j| n + j).collect()
            } else {
                (0..n).filter(|&i| p[i][u - n] > eps).collect()
            };
            for v in nbrs {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

/// Random sparse non-negative `n × m` matrix with entries 0 or in `[0.1, 1]`.
pub fn random_sparse(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..m).map(|_| if rng.random::<f64>() < density { rng.random_range(0.1..1.0) } else { 0.0 }).collect())
        .collect()
}

/// Row-stochastic version of [`random_sparse`]; every row keeps at least
/// one edge.
pub fn random_stochastic(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> Vec<Vec<f64>> {
    let mut p = random_sparse(rng, n, m, density);
    for row in &mut p {
        if row.iter().all(|&x| x == 0.0) {
            row[rng.random_range(0..m)] = 1.0;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    p
}

pub fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// All permutations of `0..k`.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best matched fraction over every bijection between padded label sets.
pub fn acc_by_enumeration(pred: &[usize], truth: &[usize]) -> f64 {
    let kp = pred.iter().max().map_or(0, |&x| x + 1);
    let kt = truth.iter().max().map_or(0, |&x| x + 1);
    let s = kp.max(kt);
    let mut best = 0usize;
    for perm in permutations(s) {
        let hits = pred.iter().zip(truth).filter(|(&p, &t)| perm[p] == t).count();
        best = best.max(hits);
    }
    best as f64 / pred.len() as f64
}

/// Minimum k = 2 clustering cost by enumerating every 2-partition.
pub fn best_two_partition_sse(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let sse = |idx: &[usize]| -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        let mut mean = vec![0.0; d];
        for &i in idx {
            for k in 0..d {
                mean[k] += points[i][k];
            }
        }
        mean.iter_mut().for_each(|x| *x /= idx.len() as f64);
        idx.iter().map(|&i| (0..d).map(|k| (points[i][k] - mean[k]).powi(2)).sum::<f64>()).sum()
    };
    let mut best = f64::INFINITY;
    // point 0 always in the first part; both parts non-empty
    for mask in 0u32..(1 << (n - 1)) {
        let (mut a, mut b) = (vec![0usize], Vec::new());
        for i in 1..n {
            if mask & (1 << (i - 1)) != 0 {
                a.push(i);
            } else {
                b.push(i);
            }
        }
        if b.is_empty() {
            continue;
        }
        best = best.min(sse(&a) + sse(&b));
    }
    best
}
