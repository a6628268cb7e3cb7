//! Simplex-constrained convex QP solved with an augmented Lagrangian split.
//!
//! Problem family: `min xᵀHx − xᵀf` subject to `x ≥ 0`, `Σx = 1`, with `H`
//! symmetric PSD. The split introduces a copy `ρ = x` and minimizes
//! `xᵀHρ − xᵀf + (μ/2)‖x − ρ + η/μ‖²` block-wise:
//!
//! * `ρ ← x + (η − Hx)/μ` (closed form),
//! * `x ← Π(ρ − (η + Hρ − f)/μ)` where `Π` projects onto the simplex,
//! * `η ← η + μ(x − ρ)`, then `μ` grows geometrically.
//!
//! Fixed points of these steps satisfy the KKT conditions of the original QP
//! for every `μ > 0`. Unbounded growth of `μ` shrinks the effective step to
//! zero before the iterates reach the optimum, so growth stops at `2λ_max(H)`,
//! beyond which the iteration contracts like projected gradient descent.
//!
//! On badly conditioned `H` that contraction is slow, so every few iterations
//! the current support is handed to an equality-constrained KKT solve; the
//! candidate is kept only if it is feasible and passes the full KKT check.

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_dense, symmetric_eigen, Mat};
use crate::numerics::simplex::project_simplex_in_place;
use crate::scalar::Real;

/// A validated symmetric PSD quadratic term, reusable across many linear terms.
#[derive(Debug, Clone)]
pub struct QuadraticForm<T> {
    h: Mat<T>,
    max_eigenvalue: T,
    min_eigenvalue: T,
}

impl<T: Real> QuadraticForm<T> {
    pub fn new(h: Mat<T>) -> Result<Self> {
        let n = h.rows();
        if n == 0 || h.cols() != n {
            return Err(Error::InvalidArgument(format!(
                "quadratic term must be square and non-empty, got {}x{}",
                h.rows(),
                h.cols()
            )));
        }
        if !h.is_finite() {
            return Err(Error::InvalidArgument("quadratic term has non-finite entries".into()));
        }
        let scale = h.as_slice().iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let sym_tol = T::lit(1e-10).max(T::lit(8.0) * T::epsilon() * scale);
        let mut asym = T::zero();
        for i in 0..n {
            for j in 0..i {
                asym = asym.max((h[(i, j)] - h[(j, i)]).abs());
            }
        }
        if asym > sym_tol {
            return Err(Error::NotSymmetric { asymmetry: asym.to_f64_lossy() });
        }
        let eig = symmetric_eigen(&h);
        let min_eigenvalue = eig.values[0];
        let max_eigenvalue = eig.values[n - 1];
        let psd_tol = T::lit(1e-8).max(T::lit(4.0) * T::epsilon() * scale * T::from_usize_lossy(n));
        if min_eigenvalue < -psd_tol {
            return Err(Error::NotPsd { min_eigenvalue: min_eigenvalue.to_f64_lossy() });
        }
        Ok(Self { h, max_eigenvalue, min_eigenvalue })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &Mat<T> {
        &self.h
    }

    pub fn max_eigenvalue(&self) -> T {
        self.max_eigenvalue
    }

    pub fn min_eigenvalue(&self) -> T {
        self.min_eigenvalue
    }

    /// Penalty ceiling: past `2λ_max` the split iteration is a contraction.
    pub fn mu_ceiling(&self) -> T {
        (T::lit(2.0) * self.max_eigenvalue).max(T::lit(1e-12))
    }
}

/// `min xᵀHx − xᵀf` over the probability simplex.
#[derive(Debug, Clone, Copy)]
pub struct SimplexQp<'a, T> {
    pub form: &'a QuadraticForm<T>,
    pub f: &'a [T],
}

impl<'a, T: Real> SimplexQp<'a, T> {
    pub fn new(form: &'a QuadraticForm<T>, f: &'a [T]) -> Result<Self> {
        if f.len() != form.dim() {
            return Err(Error::LengthMismatch { left: form.dim(), right: f.len() });
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("linear term has non-finite entries".into()));
        }
        Ok(Self { form, f })
    }

    pub fn objective(&self, x: &[T]) -> T {
        let hx = self.form.h.mul_vec(x);
        dot(x, &hx) - dot(x, self.f)
    }

    /// `‖x − Π(x − ∇)‖∞` with `∇ = 2Hx − f`; zero exactly at KKT points.
    pub fn kkt_residual(&self, x: &[T]) -> T {
        let two = T::lit(2.0);
        let hx = self.form.h.mul_vec(x);
        let mut y: Vec<T> = x.iter().zip(&hx).zip(self.f).map(|((&xi, &hi), &fi)| xi - (two * hi - fi)).collect();
        let mut scratch = Vec::with_capacity(y.len());
        project_simplex_in_place(&mut y, &mut scratch);
        x.iter().zip(&y).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// `xᵀHρ − xᵀf + (μ/2)‖x − ρ + η/μ‖²`.
    pub fn augmented_lagrangian(&self, state: &AlmState<T>) -> T {
        let h_rho = self.form.h.mul_vec(&state.rho);
        let mu = state.mu;
        let pen: T = state
            .x
            .iter()
            .zip(&state.rho)
            .zip(&state.eta)
            .map(|((&x, &r), &e)| {
                let t = x - r + e / mu;
                t * t
            })
            .sum();
        dot(&state.x, &h_rho) - dot(&state.x, self.f) + mu / T::lit(2.0) * pen
    }
}

/// Iterate of the split scheme.
#[derive(Debug, Clone)]
pub struct AlmState<T> {
    pub x: Vec<T>,
    pub rho: Vec<T>,
    pub eta: Vec<T>,
    pub mu: T,
}

impl<T: Real> AlmState<T> {
    /// `η = 0` and `ρ = x`.
    pub fn start(x0: &[T], mu: T) -> Self {
        Self { x: x0.to_vec(), rho: x0.to_vec(), eta: vec![T::zero(); x0.len()], mu }
    }

    /// Closed-form minimizer over `ρ` at fixed `x, η, μ`.
    pub fn rho_step(&mut self, qp: &SimplexQp<'_, T>) {
        let hx = qp.form.h.mul_vec(&self.x);
        for ((r, &x), (&e, &h)) in self.rho.iter_mut().zip(&self.x).zip(self.eta.iter().zip(&hx)) {
            *r = x + (e - h) / self.mu;
        }
    }

    /// Simplex-projected minimizer over `x` at fixed `ρ, η, μ`.
    pub fn x_step(&mut self, qp: &SimplexQp<'_, T>, scratch: &mut Vec<T>) {
        let h_rho = qp.form.h.mul_vec(&self.rho);
        for (((x, &r), &e), (&hr, &f)) in
            self.x.iter_mut().zip(&self.rho).zip(&self.eta).zip(h_rho.iter().zip(qp.f))
        {
            *x = r - (e + hr - f) / self.mu;
        }
        project_simplex_in_place(&mut self.x, scratch);
    }

    /// `η ← η + μ(x − ρ)`; returns `‖x − ρ‖∞` before the update.
    pub fn multiplier_step(&mut self) -> T {
        let mut gap = T::zero();
        for ((e, &x), &r) in self.eta.iter_mut().zip(&self.x).zip(&self.rho) {
            gap = gap.max((x - r).abs());
            *e += self.mu * (x - r);
        }
        gap
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AlmOptions<T> {
    /// Stop once `‖x − ρ‖∞ < tol` with `μ` at its ceiling.
    pub tol: T,
    pub max_iter: usize,
    pub mu0: T,
    pub growth: T,
}

impl<T: Real> Default for AlmOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-10), max_iter: 20_000, mu0: T::lit(2.0), growth: T::lit(2.0) }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub objective: T,
    pub kkt_residual: T,
}

/// Solves one simplex QP from the warm start `x0` (projected onto the simplex first).
pub fn solve_simplex_qp<T: Real>(qp: &SimplexQp<'_, T>, x0: &[T], opts: &AlmOptions<T>) -> Result<QpSolution<T>> {
    let dim = qp.form.dim();
    if x0.len() != dim {
        return Err(Error::LengthMismatch { left: dim, right: x0.len() });
    }
    let mut scratch = Vec::with_capacity(dim);
    let mut start = x0.to_vec();
    project_simplex_in_place(&mut start, &mut scratch);
    if dim == 1 {
        let objective = qp.objective(&start);
        return Ok(QpSolution { x: start, iterations: 0, objective, kkt_residual: T::zero() });
    }

    let ceiling = qp.form.mu_ceiling();
    let mut state = AlmState::start(&start, opts.mu0.min(ceiling));
    let mut gap = T::infinity();
    let mut next_polish = None;
    let mut polish_gap = POLISH_AFTER;
    let done = |x: Vec<T>, iterations: usize| {
        let objective = qp.objective(&x);
        let kkt_residual = qp.kkt_residual(&x);
        Ok(QpSolution { x, iterations, objective, kkt_residual })
    };
    for it in 1..=opts.max_iter {
        state.rho_step(qp);
        state.x_step(qp, &mut scratch);
        gap = state.multiplier_step();
        let at_ceiling = state.mu >= ceiling;
        if !at_ceiling {
            state.mu = (state.mu * opts.growth).min(ceiling);
        }
        if at_ceiling && gap < opts.tol {
            return done(state.x, it);
        }
        if at_ceiling {
            let due = *next_polish.get_or_insert(it + POLISH_AFTER);
            if it == due {
                if let Some(x) = active_set_refine(qp, &state.x, opts.tol) {
                    return done(x, it);
                }
                polish_gap *= 2;
                next_polish = Some(it + polish_gap);
            }
        }
    }
    if let Some(x) = active_set_refine(qp, &state.x, opts.tol) {
        return done(x, opts.max_iter);
    }
    Err(Error::QpNotConverged { iterations: opts.max_iter, residual: gap.to_f64_lossy() })
}

/// Iterations at the `μ` cap before the first active-set refinement; later
/// attempts back off geometrically.
const POLISH_AFTER: usize = 16;

/// Primal active-set refinement started from the feasible point `x0`. Each
/// step solves `[2H_FF 1; 1ᵀ 0][x_F; λ] = [f_F; 1]` on the free set `F`,
/// moves toward it until a bound blocks, and releases the bound with the most
/// negative multiplier once the step is unblocked. Returns `None` if a KKT
/// system is singular or the step budget runs out; a returned point always
/// passes the KKT check.
fn active_set_refine<T: Real>(qp: &SimplexQp<'_, T>, x0: &[T], tol: T) -> Option<Vec<T>> {
    let d = x0.len();
    let h = &qp.form.h;
    let two = T::lit(2.0);
    let scale = T::one() + qp.form.max_eigenvalue.abs() + qp.f.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let accept = tol.max(T::lit(64.0) * T::epsilon() * scale);
    let mut x = x0.to_vec();
    let mut free: Vec<bool> = x.iter().map(|&v| v > T::zero()).collect();
    for _ in 0..4 * d + 8 {
        let idx: Vec<usize> = (0..d).filter(|&i| free[i]).collect();
        let k = idx.len();
        if k == 0 {
            return None;
        }
        let mut kkt = Mat::zeros(k + 1, k + 1);
        let mut rhs = vec![T::zero(); k + 1];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                kkt[(a, b)] = two * h[(i, j)];
            }
            kkt[(a, k)] = T::one();
            kkt[(k, a)] = T::one();
            rhs[a] = qp.f[i];
        }
        rhs[k] = T::one();
        let sol = solve_dense(&kkt, &rhs, T::lit(1e-12) * scale)?;
        // largest step toward the equality solution that keeps x ≥ 0
        let mut step = T::one();
        let mut blocking = None;
        for (a, &i) in idx.iter().enumerate() {
            if sol[a] < T::zero() {
                let t = x[i] / (x[i] - sol[a]);
                if t < step {
                    step = t;
                    blocking = Some(i);
                }
            }
        }
        for (a, &i) in idx.iter().enumerate() {
            let xi = x[i];
            x[i] = xi + step * (sol[a] - xi);
        }
        if let Some(i) = blocking {
            x[i] = T::zero();
            free[i] = false;
            continue;
        }
        // ν_j = g_j + λ must be non-negative on the bound set
        let lambda = sol[k];
        let g = qp.form.h.mul_vec(&x);
        let release = (0..d)
            .filter(|&j| !free[j])
            .map(|j| (j, two * g[j] - qp.f[j] + lambda))
            .filter(|&(_, nu)| nu < -accept)
            .fold(None, |best: Option<(usize, T)>, c| match best {
                Some(b) if b.1 <= c.1 => Some(b),
                _ => Some(c),
            });
        match release {
            Some((j, _)) => free[j] = true,
            None => {
                project_simplex_in_place(&mut x, &mut Vec::with_capacity(d));
                return (qp.kkt_residual(&x) <= accept).then_some(x);
            }
        }
    }
    None
}
