//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{sq_dist, Mat};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct KMeans<T> {
    /// `d × k`, one center per column.
    pub centers: Mat<T>,
    pub assignments: Vec<usize>,
    pub sse: T,
    /// SSE after every assignment step, starting with the seeded centers.
    pub sse_trace: Vec<T>,
    pub iterations: usize,
}

/// Clusters the columns of `points` (`d × n`) into `k` groups.
pub fn kmeans<T: Real>(points: &Mat<T>, k: usize, seed: u64, max_iter: usize) -> Result<KMeans<T>> {
    let n = points.cols();
    if n == 0 {
        return Err(Error::InvalidArgument("k-means needs at least one point".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k-means needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let pts = points.transpose();
    let d = pts.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_plus_plus(&pts, k, &mut rng);

    let mut assignments = vec![0usize; n];
    let mut dist = vec![T::zero(); n];
    assign(&pts, &centers, &mut assignments, &mut dist);
    let mut sse_trace = vec![dist.iter().copied().sum()];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        update_centers(&pts, &mut centers, &mut assignments, &mut dist);
        let before = assignments.clone();
        assign(&pts, &centers, &mut assignments, &mut dist);
        sse_trace.push(dist.iter().copied().sum());
        if before == assignments {
            break;
        }
    }
    // Centers must be the means of the returned assignment.
    update_centers(&pts, &mut centers, &mut assignments, &mut dist);
    let sse = (0..n).map(|i| sq_dist(pts.row(i), centers.row(assignments[i]))).sum();
    debug_assert_eq!(centers.cols(), d);
    Ok(KMeans { centers: centers.transpose(), assignments, sse, sse_trace, iterations })
}

fn seed_plus_plus<T: Real>(pts: &Mat<T>, k: usize, rng: &mut ChaCha8Rng) -> Mat<T> {
    let n = pts.rows();
    let mut chosen = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    chosen.push(first);
    let mut dist: Vec<T> = (0..n).map(|i| sq_dist(pts.row(i), pts.row(first))).collect();
    while chosen.len() < k {
        let total: T = dist.iter().copied().sum();
        let pick = if total > T::zero() {
            let target = T::lit(rng.random::<f64>()) * total;
            let mut acc = T::zero();
            let mut pick = None;
            for (i, &w) in dist.iter().enumerate() {
                if w <= T::zero() {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight has a positive entry")
        } else {
            // all remaining points coincide with a chosen center
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(pick);
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(pts.row(i), pts.row(pick)));
        }
    }
    Mat::from_fn(k, pts.cols(), |c, j| pts[(chosen[c], j)])
}

fn assign<T: Real>(pts: &Mat<T>, centers: &Mat<T>, assignments: &mut [usize], dist: &mut [T]) {
    for (i, p) in pts.row_iter().enumerate() {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (c, center) in centers.row_iter().enumerate() {
            let dd = sq_dist(p, center);
            if dd < best_d {
                best_d = dd;
                best = c;
            }
        }
        assignments[i] = best;
        dist[i] = best_d;
    }
}

/// Recomputes centers as cluster means; an empty cluster seizes the point
/// farthest from its current center.
fn update_centers<T: Real>(pts: &Mat<T>, centers: &mut Mat<T>, assignments: &mut [usize], dist: &mut [T]) {
    let k = centers.rows();
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    for e in 0..k {
        if counts[e] > 0 {
            continue;
        }
        let far = (0..pts.rows())
            .filter(|&i| counts[assignments[i]] > 1)
            .max_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap_or(std::cmp::Ordering::Equal));
        if let Some(i) = far {
            counts[assignments[i]] -= 1;
            assignments[i] = e;
            counts[e] = 1;
            dist[i] = T::zero();
        }
    }
    let mut sums = Mat::<T>::zeros(k, pts.cols());
    for (i, p) in pts.row_iter().enumerate() {
        for (s, &x) in sums.row_mut(assignments[i]).iter_mut().zip(p) {
            *s += x;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let inv = T::from_usize_lossy(count);
        for (dst, &s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
            *dst = s / inv;
        }
    }
}
