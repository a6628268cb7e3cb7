//! Truncated SVD of tall matrices through the Gram matrix `MᵀM`.

use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, Mat};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct TruncatedSvd<T> {
    /// `n × c` left singular vectors.
    pub u: Mat<T>,
    /// Descending singular values.
    pub sigma: Vec<T>,
    /// `m × c` right singular vectors.
    pub v: Mat<T>,
}

/// Singular values below this are treated as zero when back-substituting.
const SIGMA_FLOOR: f64 = 1e-12;

/// Top-`c` singular triplets of `m` (`n × m`, `n ≥ m` expected).
///
/// Costs `O(n m²)` for the Gram matrix plus `O(m³)` for its eigensolve.
/// Left vectors come from `U = M V Σ⁻¹`; columns whose singular value is
/// numerically zero are completed to an orthonormal set.
pub fn truncated_svd<T: Real>(m: &Mat<T>, c: usize) -> Result<TruncatedSvd<T>> {
    let (rows, cols) = m.shape();
    if c > cols || c > rows {
        return Err(Error::InvalidArgument(format!(
            "truncated_svd: requested {c} triplets from a {rows}x{cols} matrix"
        )));
    }
    let gram = m.t_matmul(m);
    let eig = symmetric_eigen(&gram);

    let mut v = Mat::zeros(cols, c);
    let mut u = Mat::zeros(rows, c);
    let mut sigma = Vec::with_capacity(c);
    let mut u_cols: Vec<Vec<T>> = Vec::with_capacity(c);
    let floor = T::lit(SIGMA_FLOOR);

    for k in 0..c {
        let idx = cols - 1 - k;
        let vk = eig.vectors.col(idx);
        let mv = m.mul_vec(&vk);
        let s = dot(&mv, &mv).sqrt();
        let mut uk = if s > floor {
            mv.iter().map(|&x| x / s).collect::<Vec<_>>()
        } else {
            Vec::new()
        };
        if !uk.is_empty() && !orthonormalize(&mut uk, &u_cols) {
            uk.clear();
        }
        if uk.is_empty() {
            uk = complete_basis(rows, &u_cols);
        }
        for i in 0..cols {
            v[(i, k)] = vk[i];
        }
        for i in 0..rows {
            u[(i, k)] = uk[i];
        }
        sigma.push(if s > floor { s } else { T::zero() });
        u_cols.push(uk);
    }
    Ok(TruncatedSvd { u, sigma, v })
}

/// Two passes of Gram–Schmidt against `basis`, then normalization.
/// Returns `false` if the vector collapsed.
fn orthonormalize<T: Real>(x: &mut [T], basis: &[Vec<T>]) -> bool {
    let start = dot(x, x).sqrt();
    for _ in 0..2 {
        for b in basis {
            let proj = dot(x, b);
            for (xi, &bi) in x.iter_mut().zip(b) {
                *xi -= proj * bi;
            }
        }
    }
    let norm = dot(x, x).sqrt();
    if norm.is_nan() || norm <= T::lit(1e-6) * start || norm == T::zero() {
        return false;
    }
    for xi in x.iter_mut() {
        *xi /= norm;
    }
    true
}

fn complete_basis<T: Real>(rows: usize, basis: &[Vec<T>]) -> Vec<T> {
    for i in 0..rows {
        let mut e = vec![T::zero(); rows];
        e[i] = T::one();
        if orthonormalize(&mut e, basis) && dot(&e, &e) > T::lit(0.5) {
            return e;
        }
    }
    unreachable!("fewer than `rows` basis vectors always admit a completion")
}
