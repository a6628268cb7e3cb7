//! Euclidean projection onto the probability simplex.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Returns `argmin ‖x − v‖₂` subject to `x ≥ 0`, `Σx = 1`.
///
/// Sort-and-threshold closed form: with `u` the entries of `v` sorted in
/// decreasing order, the threshold is `θ = (Σ_{i≤r} u_i − 1) / r` where `r`
/// is the largest index with `u_r > θ_r`; the projection is `max(v − θ, 0)`.
pub fn project_simplex<T: Real>(v: &[T]) -> Result<Vec<T>> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("cannot project an empty vector onto the simplex".into()));
    }
    let mut out = v.to_vec();
    let mut scratch = Vec::with_capacity(v.len());
    project_simplex_in_place(&mut out, &mut scratch);
    Ok(out)
}

/// In-place variant for hot loops; `scratch` is reused between calls.
///
/// `v` must be non-empty.
pub fn project_simplex_in_place<T: Real>(v: &mut [T], scratch: &mut Vec<T>) {
    debug_assert!(!v.is_empty());
    let theta = simplex_threshold(v, scratch);
    for x in v.iter_mut() {
        *x = (*x - theta).max(T::zero());
    }
}

fn simplex_threshold<T: Real>(v: &[T], sorted: &mut Vec<T>) -> T {
    sorted.clear();
    sorted.extend_from_slice(v);
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = T::zero();
    let mut theta = sorted[0] - T::one();
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - T::one()) / T::from_usize_lossy(k + 1);
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    theta
}

/// Max violation of the simplex constraints: `max(|Σx − 1|, −min x)`.
pub fn simplex_violation<T: Real>(x: &[T]) -> T {
    let sum: T = x.iter().copied().sum();
    let min = x.iter().copied().fold(T::infinity(), T::min);
    (sum - T::one()).abs().max(-min).max(T::zero())
}
