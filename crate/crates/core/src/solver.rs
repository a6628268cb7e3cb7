//! Alternating minimization of the unified objective
//!
//! ```text
//! Σ_v ‖X⁽ᵛ⁾ − A⁽ᵛ⁾Z⁽ᵛ⁾ᵀ‖²_F + α‖Z⁽ᵛ⁾‖²_F  +  β‖Σ_v δ⁽ᵛ⁾Z⁽ᵛ⁾ − P‖²_F
//! ```
//!
//! over row-stochastic view graphs `Z⁽ᵛ⁾`, view weights `δ` on the simplex
//! and a row-stochastic consensus graph `P` whose sample–anchor graph has
//! exactly `c` connected components. Each outer iteration updates `P` (with
//! the rank penalty `γ` adapted until the component count hits `c`), then
//! every `Z⁽ᵛ⁾` row by row, then `δ`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anchors::{build_anchors, AnchorSet};
use crate::dataset::{normalize, ClusterLabels, MultiViewDataset, Normalization};
use crate::error::{Error, Result};
use crate::graphs::{
    count_components, degrees, extract_labels, knn_bipartite_init, ComponentCount, ConsensusBipartiteGraph, Degrees,
    SpectralEmbedding, ViewBipartiteGraph, EDGE_EPS,
};
use crate::linalg::{dot, sq_dist, Mat};
use crate::numerics::{project_simplex_in_place, solve_simplex_qp, truncated_svd, AlmOptions, QuadraticForm, SimplexQp};
use crate::scalar::Real;

/// Which parts of the model are learned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Joint learning of `Z`, `P` and `δ`.
    #[default]
    Full,
    /// `Z` frozen at the K-NN initialization; only fusion is learned.
    KnnFusionOnly,
    /// `Z` learned first without the fusion coupling, then frozen.
    TwoPhase,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "knn_fusion_only" => Ok(Self::KnnFusionOnly),
            "two_phase" => Ok(Self::TwoPhase),
            other => Err(Error::InvalidConfig(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Number of clusters.
    pub c: usize,
    /// Number of anchors; defaults to `c`.
    pub m: Option<usize>,
    /// Neighbours in the K-NN initialization; defaults to `min(5, m)`.
    pub k: Option<usize>,
    pub outer_max_iter: usize,
    /// Relative objective change that ends the outer loop.
    pub outer_tol: f64,
    pub gamma0: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub p_inner_max: usize,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
    pub kmeans_max_iter: usize,
    pub seed: u64,
    pub normalization: Normalization,
    /// Restart `γ` from `gamma0` at every outer iteration.
    pub reset_gamma: bool,
    /// Restart the `δ` solve from the uniform vector at every outer iteration.
    pub reset_delta: bool,
    pub variant: Variant,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            c: 2,
            m: None,
            k: None,
            outer_max_iter: 50,
            outer_tol: 1e-6,
            gamma0: 0.1,
            gamma_min: 1e-8,
            gamma_max: 1e8,
            p_inner_max: 60,
            qp_tol: 1e-10,
            qp_max_iter: 20_000,
            kmeans_max_iter: 100,
            seed: 0,
            normalization: Normalization::MinMax,
            reset_gamma: true,
            reset_delta: true,
            variant: Variant::Full,
        }
    }
}

impl SolverConfig {
    pub fn with_clusters(c: usize) -> Self {
        Self { c, ..Self::default() }
    }

    pub fn anchors(&self) -> usize {
        self.m.unwrap_or(self.c)
    }

    pub fn neighbours(&self) -> usize {
        self.k.unwrap_or_else(|| self.anchors().min(5))
    }

    /// Checks every field; `n` is the sample count of the data to be fitted.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.beta > 0.0) || !self.alpha.is_finite() || !self.beta.is_finite() {
            return bad("alpha, beta must be positive".into());
        }
        if self.c == 0 {
            return bad("c must be at least 1".into());
        }
        let m = self.anchors();
        if m < self.c || m > n {
            return bad(format!("anchor count must satisfy c <= m <= n, got c = {}, m = {m}, n = {n}", self.c));
        }
        let k = self.neighbours();
        if k == 0 || k > m {
            return bad(format!("K must satisfy 1 <= K <= m, got K = {k}, m = {m}"));
        }
        if !(self.gamma0 > 0.0 && self.gamma_min > 0.0 && self.gamma_min <= self.gamma0 && self.gamma0 <= self.gamma_max)
        {
            return bad("gamma bounds must satisfy 0 < gamma_min <= gamma0 <= gamma_max".into());
        }
        if self.outer_max_iter == 0 || self.p_inner_max == 0 || self.qp_max_iter == 0 {
            return bad("iteration limits must be positive".into());
        }
        if !(self.outer_tol >= 0.0 && self.qp_tol > 0.0) {
            return bad("tolerances must be non-negative (qp_tol positive)".into());
        }
        Ok(())
    }

    fn alm_options<T: Real>(&self) -> AlmOptions<T> {
        AlmOptions { tol: T::lit(self.qp_tol), max_iter: self.qp_max_iter, ..AlmOptions::default() }
    }
}

/// Wall-clock seconds per stage of `fit`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub normalize: f64,
    pub anchors: f64,
    pub init: f64,
    pub optimize: f64,
    pub labels: f64,
}

#[derive(Debug, Clone)]
pub struct SolverState<T> {
    pub zs: Vec<ViewBipartiteGraph<T>>,
    pub p: ConsensusBipartiteGraph<T>,
    pub delta: Vec<T>,
    pub embedding: SpectralEmbedding<T>,
    pub gamma: T,
    /// Objective after initialization, then after every outer iteration.
    pub objective_trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Inner rank-loop iterations of every `P` update.
    pub p_inner_iterations: Vec<usize>,
    /// Seconds spent in each outer iteration.
    pub iteration_seconds: Vec<f64>,
    pub timings: StageTimings,
    pub anchors: AnchorSet<T>,
}

/// `B = Σ_v δ⁽ᵛ⁾ Z⁽ᵛ⁾`.
pub fn blend<T: Real>(zs: &[ViewBipartiteGraph<T>], delta: &[T]) -> Result<Mat<T>> {
    if zs.len() != delta.len() || zs.is_empty() {
        return Err(Error::LengthMismatch { left: zs.len(), right: delta.len() });
    }
    let (n, m) = zs[0].weights().shape();
    let mut b = Mat::zeros(n, m);
    for (z, &d) in zs.iter().zip(delta) {
        if z.weights().shape() != (n, m) {
            return Err(Error::InvalidArgument("view graphs differ in shape".into()));
        }
        for (o, &w) in b.as_mut_slice().iter_mut().zip(z.weights().as_slice()) {
            *o += d * w;
        }
    }
    Ok(b)
}

/// Embedding that minimizes `Tr(FᵀL̃_S F)` for the graph `p`:
/// `F_(n) = U/√2`, `F_(m) = V/√2` from the top-`c` singular vectors of
/// `D_(n)^{-1/2} P D_(m)^{-1/2}`.
pub fn update_f<T: Real>(p: &Mat<T>, c: usize) -> Result<SpectralEmbedding<T>> {
    let d = degrees(p);
    update_f_with(p, &d, c)
}

fn update_f_with<T: Real>(p: &Mat<T>, d: &Degrees<T>, c: usize) -> Result<SpectralEmbedding<T>> {
    let m = p.cols();
    if c > m {
        return Err(Error::InvalidArgument(format!("embedding dimension c = {c} exceeds anchor count m = {m}")));
    }
    let inv_n: Vec<T> = d.n.iter().map(|x| x.sqrt().recip()).collect();
    let inv_m: Vec<T> = d.m.iter().map(|x| x.sqrt().recip()).collect();
    let mut normalized = p.clone();
    for (row, &si) in normalized.rows_mut().zip(&inv_n) {
        for (x, &sj) in row.iter_mut().zip(&inv_m) {
            *x = *x * si * sj;
        }
    }
    let svd = truncated_svd(&normalized, c)?;
    let half = T::lit(0.5).sqrt();
    Ok(SpectralEmbedding { f_n: svd.u.map(|x| x * half), f_m: svd.v.map(|x| x * half), sigma: svd.sigma })
}

/// `q_ij = ‖F_(n)(i,:)/√d_n(i) − F_(m)(j,:)/√d_m(j)‖²`.
pub fn compute_q<T: Real>(emb: &SpectralEmbedding<T>, d: &Degrees<T>) -> Mat<T> {
    let scaled = |f: &Mat<T>, deg: &[T]| {
        let mut out = f.clone();
        for (row, &dd) in out.rows_mut().zip(deg) {
            let s = dd.sqrt().recip();
            row.iter_mut().for_each(|x| *x *= s);
        }
        out
    };
    let a = scaled(&emb.f_n, &d.n);
    let b = scaled(&emb.f_m, &d.m);
    let (n, m) = (a.rows(), b.rows());
    let mut q = Mat::zeros(n, m);
    if m == 0 {
        return q;
    }
    q.as_mut_slice().par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        let ai = a.row(i);
        for (j, x) in row.iter_mut().enumerate() {
            *x = sq_dist(ai, b.row(j));
        }
    });
    q
}

/// Row-wise `p_i = Π(b_i − (γ/2) q_i)`.
pub fn update_p_rows<T: Real>(b: &Mat<T>, q: &Mat<T>, gamma: T) -> Mat<T> {
    assert_eq!(b.shape(), q.shape(), "B and Q must have the same shape");
    let m = b.cols();
    let mut p = b.clone();
    if m == 0 {
        return p;
    }
    let half = gamma / T::lit(2.0);
    p.as_mut_slice().par_chunks_mut(m).enumerate().for_each_init(
        || Vec::with_capacity(m),
        |scratch, (i, row)| {
            for (x, &qij) in row.iter_mut().zip(q.row(i)) {
                *x -= half * qij;
            }
            project_simplex_in_place(row, scratch);
        },
    );
    p
}

/// Result of the rank-constrained `P` update.
#[derive(Debug, Clone)]
pub struct PUpdate<T> {
    pub p: Mat<T>,
    pub embedding: SpectralEmbedding<T>,
    pub gamma: T,
    pub components: ComponentCount,
    pub inner_iterations: usize,
}

/// `‖B − P‖² + γ Tr(FᵀL̃_S F)` with `F` optimal for `P`.
fn joint_surrogate<T: Real>(b: &Mat<T>, p: &Mat<T>, emb: &SpectralEmbedding<T>, gamma: T) -> T {
    sq_diff(b, p) + gamma * emb.trace_term()
}

/// The row problem `Σ (b_ij − p_ij)² + γ q_ij p_ij` with `Q` held fixed.
fn frozen_surrogate<T: Real>(b: &Mat<T>, p: &Mat<T>, q: &Mat<T>, gamma: T) -> T {
    sq_diff(b, p) + gamma * q.frob_dot(p)
}

fn sq_diff<T: Real>(a: &Mat<T>, b: &Mat<T>) -> T {
    a.as_slice().iter().zip(b.as_slice()).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Surrogate values around one `(Q, P, F)` sweep at fixed `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PSweep<T> {
    pub gamma: T,
    /// Row problem at the `Q` built from the previous `P`, before and after
    /// the projection step. Exact minimization makes this non-increasing.
    pub frozen_before: T,
    pub frozen_after: T,
    /// `‖B − P‖² + γ(c − Σσ)`, each side with its own degrees and optimal `F`.
    pub joint_before: T,
    pub joint_after: T,
}

/// Alternates embedding, `Q`, and row projections, doubling `γ` while the
/// graph has fewer than `c` components and halving it while it has more.
/// `B` stays fixed throughout; `F` and degrees start from `B`.
pub fn update_p<T: Real>(b: &Mat<T>, c: usize, cfg: &SolverConfig, gamma_start: T) -> Result<PUpdate<T>> {
    update_p_observed(b, c, cfg, gamma_start, &mut NoObserver)
}

fn update_p_observed<T: Real>(
    b: &Mat<T>,
    c: usize,
    cfg: &SolverConfig,
    gamma_start: T,
    observer: &mut dyn Observer<T>,
) -> Result<PUpdate<T>> {
    let eps = T::lit(EDGE_EPS);
    let (gamma_min, gamma_max) = (T::lit(cfg.gamma_min), T::lit(cfg.gamma_max));
    let mut gamma = gamma_start;
    let mut deg = degrees(b);
    let mut emb = update_f_with(b, &deg, c)?;
    observer.embedding(b, &emb);
    let mut current = b.clone();
    let mut last_count = count_components(b, eps).full;
    for it in 1..=cfg.p_inner_max {
        let joint_before = joint_surrogate(b, &current, &emb, gamma);
        let q = compute_q(&emb, &deg);
        let p = update_p_rows(b, &q, gamma);
        let frozen_before = frozen_surrogate(b, &current, &q, gamma);
        let frozen_after = frozen_surrogate(b, &p, &q, gamma);
        deg = degrees(&p);
        emb = update_f_with(&p, &deg, c)?;
        observer.embedding(&p, &emb);
        observer.p_sweep(&PSweep {
            gamma,
            frozen_before,
            frozen_after,
            joint_before,
            joint_after: joint_surrogate(b, &p, &emb, gamma),
        });
        let components = count_components(&p, eps);
        last_count = components.full;
        current = p;
        if components.full == c {
            return Ok(PUpdate { p: current, embedding: emb, gamma, components, inner_iterations: it });
        }
        if components.full < c {
            gamma *= T::lit(2.0);
        } else {
            gamma /= T::lit(2.0);
        }
        if gamma < gamma_min || gamma > gamma_max {
            return Err(Error::RankUnreachable {
                target: c,
                last_count,
                gamma: gamma.to_f64_lossy(),
                iterations: it,
            });
        }
    }
    Err(Error::RankUnreachable { target: c, last_count, gamma: gamma.to_f64_lossy(), iterations: cfg.p_inner_max })
}

/// Per-view quantities that stay fixed during the optimization.
#[derive(Debug, Clone)]
pub struct ViewCache<T> {
    /// `n × d`, one sample per row.
    pub samples: Mat<T>,
    /// `m × d`, one anchor per row.
    pub anchor_rows: Mat<T>,
    /// `AᵀA`, `m × m`.
    pub ata: Mat<T>,
    /// `XᵀA`, row `j` is `Aᵀx_j`.
    pub atx: Mat<T>,
}

impl<T: Real> ViewCache<T> {
    /// `x` is `d × n`, `a` is `d × m`.
    pub fn new(x: &Mat<T>, a: &Mat<T>) -> Result<Self> {
        if x.rows() != a.rows() {
            return Err(Error::LengthMismatch { left: x.rows(), right: a.rows() });
        }
        let samples = x.transpose();
        let anchor_rows = a.transpose();
        let ata = a.t_matmul(a);
        let atx = x.t_matmul(a);
        Ok(Self { samples, anchor_rows, ata, atx })
    }
}

/// Row-wise QP update of `Z⁽ᵛ⁾` with `H̄ = AᵀA + (α + β δ_v²) I` and
/// `f̄_j = −2Aᵀx_j + 2βδ_v(Σ_{i≠v} δ_i z_j⁽ⁱ⁾ − p_j)`. Rows warm-start from
/// the current `Z⁽ᵛ⁾`; a row whose QP value would not improve is kept.
#[allow(clippy::too_many_arguments)]
pub fn update_z<T: Real>(
    v: usize,
    x: &Mat<T>,
    a: &Mat<T>,
    zs: &[ViewBipartiteGraph<T>],
    delta: &[T],
    p: &Mat<T>,
    alpha: T,
    beta: T,
    opts: &AlmOptions<T>,
) -> Result<ViewBipartiteGraph<T>> {
    let cache = ViewCache::new(x, a)?;
    update_z_cached(v, &cache, zs, delta, p, alpha, beta, opts)
}

#[allow(clippy::too_many_arguments)]
pub fn update_z_cached<T: Real>(
    v: usize,
    cache: &ViewCache<T>,
    zs: &[ViewBipartiteGraph<T>],
    delta: &[T],
    p: &Mat<T>,
    alpha: T,
    beta: T,
    opts: &AlmOptions<T>,
) -> Result<ViewBipartiteGraph<T>> {
    if zs.len() != delta.len() || v >= zs.len() {
        return Err(Error::LengthMismatch { left: zs.len(), right: delta.len() });
    }
    let m = cache.ata.rows();
    let n = cache.samples.rows();
    if p.shape() != (n, m) || zs.iter().any(|z| z.weights().shape() != (n, m)) {
        return Err(Error::InvalidArgument("update_z: graph shapes disagree with the view data".into()));
    }
    let dv = delta[v];
    let mut h = cache.ata.clone();
    let ridge = alpha + beta * dv * dv;
    for i in 0..m {
        h[(i, i)] += ridge;
    }
    let form = QuadraticForm::new(h)?;
    let two = T::lit(2.0);
    let current = zs[v].weights();

    let rows: Vec<Result<Vec<T>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            // f̄_j, then the QP's linear term is −f̄_j
            let mut fbar: Vec<T> = cache.atx.row(j).iter().map(|&g| -two * g).collect();
            let coupling = two * beta * dv;
            for (k, fk) in fbar.iter_mut().enumerate() {
                let mut others = T::zero();
                for (i, (z, &di)) in zs.iter().zip(delta).enumerate() {
                    if i != v {
                        others += di * z.weights()[(j, k)];
                    }
                }
                *fk += coupling * (others - p[(j, k)]);
            }
            let lin: Vec<T> = fbar.iter().map(|&x| -x).collect();
            let qp = SimplexQp::new(&form, &lin)?;
            let old = current.row(j);
            let sol = solve_simplex_qp(&qp, old, opts)
                .map_err(|e| Error::RowQp { view: v, row: j, source: Box::new(e) })?;
            if sol.objective <= qp.objective(old) {
                Ok(sol.x)
            } else {
                Ok(old.to_vec())
            }
        })
        .collect();
    let mut z = Mat::zeros(n, m);
    for (j, row) in rows.into_iter().enumerate() {
        z.row_mut(j).copy_from_slice(&row?);
    }
    ViewBipartiteGraph::new(z)
}

/// Gram system of the view-weight subproblem: `H_uv = ⟨Z_u, Z_v⟩_F`,
/// `f_v = 2⟨Z_v, P⟩_F`.
pub fn delta_system<T: Real>(zs: &[ViewBipartiteGraph<T>], p: &Mat<T>) -> Result<(Mat<T>, Vec<T>)> {
    let v = zs.len();
    if v == 0 {
        return Err(Error::InvalidArgument("no view graphs".into()));
    }
    if zs.iter().any(|z| z.weights().shape() != p.shape()) {
        return Err(Error::InvalidArgument("view graphs and P differ in shape".into()));
    }
    let mut h = Mat::zeros(v, v);
    for a in 0..v {
        for b in 0..=a {
            let g = zs[a].weights().frob_dot(zs[b].weights());
            h[(a, b)] = g;
            h[(b, a)] = g;
        }
    }
    let f = zs.iter().map(|z| T::lit(2.0) * z.weights().frob_dot(p)).collect();
    Ok((h, f))
}

/// Solves `min ‖Σ δ_v Z_v − P‖²` over the simplex, starting from the uniform
/// vector when `reset` is set and from `previous` otherwise. `previous` is
/// returned unchanged if the new weights would not lower the fusion term.
pub fn update_delta<T: Real>(
    zs: &[ViewBipartiteGraph<T>],
    p: &Mat<T>,
    previous: &[T],
    reset: bool,
    opts: &AlmOptions<T>,
) -> Result<Vec<T>> {
    let v = zs.len();
    if previous.len() != v {
        return Err(Error::LengthMismatch { left: v, right: previous.len() });
    }
    let (h, f) = delta_system(zs, p)?;
    let form = QuadraticForm::new(h)?;
    let qp = SimplexQp::new(&form, &f)?;
    let start = if reset { vec![T::one() / T::from_usize_lossy(v); v] } else { previous.to_vec() };
    let sol = solve_simplex_qp(&qp, &start, opts)?;
    if sol.objective <= qp.objective(previous) {
        Ok(sol.x)
    } else {
        Ok(previous.to_vec())
    }
}

/// The three parts of the unified objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms<T> {
    pub reconstruction: T,
    pub regularization: T,
    pub fusion: T,
}

impl<T: Real> ObjectiveTerms<T> {
    pub fn total(&self) -> T {
        self.reconstruction + self.regularization + self.fusion
    }
}

/// Evaluates every term. Views are `n × d_v` sample rows and `m × d_v`
/// anchor rows (see [`ViewCache`]).
pub fn objective_terms<T: Real>(
    caches: &[ViewCache<T>],
    zs: &[ViewBipartiteGraph<T>],
    delta: &[T],
    p: &Mat<T>,
    alpha: T,
    beta: T,
) -> Result<ObjectiveTerms<T>> {
    let mut reconstruction = T::zero();
    let mut regularization = T::zero();
    for (cache, z) in caches.iter().zip(zs) {
        let w = z.weights();
        let per_row: Vec<T> = (0..cache.samples.rows())
            .into_par_iter()
            .map(|j| {
                let mut r = cache.samples.row(j).to_vec();
                for (k, &zjk) in w.row(j).iter().enumerate() {
                    if zjk != T::zero() {
                        for (ri, &ak) in r.iter_mut().zip(cache.anchor_rows.row(k)) {
                            *ri -= zjk * ak;
                        }
                    }
                }
                dot(&r, &r)
            })
            .collect();
        reconstruction += per_row.into_iter().sum::<T>();
        regularization += alpha * w.frobenius_sq();
    }
    let b = blend(zs, delta)?;
    let fusion = beta * sq_diff(&b, p);
    Ok(ObjectiveTerms { reconstruction, regularization, fusion })
}

/// Unified objective of `state` on the already-normalized dataset `ds`.
pub fn objective<T: Real>(
    state: &SolverState<T>,
    ds: &MultiViewDataset<T>,
    anchors: &AnchorSet<T>,
    cfg: &SolverConfig,
) -> Result<T> {
    let caches = ds
        .views()
        .iter()
        .zip(&anchors.per_view)
        .map(|(x, a)| ViewCache::new(x, a))
        .collect::<Result<Vec<_>>>()?;
    let terms =
        objective_terms(&caches, &state.zs, &state.delta, state.p.weights(), T::lit(cfg.alpha), T::lit(cfg.beta))?;
    Ok(terms.total())
}

/// Which block was just updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Init,
    P,
    Z(usize),
    Delta,
}

/// Read-only view of the iterate handed to an [`Observer`].
pub struct Snapshot<'a, T> {
    pub stage: Stage,
    pub iteration: usize,
    pub zs: &'a [ViewBipartiteGraph<T>],
    pub p: &'a Mat<T>,
    pub delta: &'a [T],
    pub embedding: &'a SpectralEmbedding<T>,
    pub gamma: T,
    caches: &'a [ViewCache<T>],
    alpha: T,
    beta: T,
}

impl<T: Real> Snapshot<'_, T> {
    pub fn objective(&self) -> T {
        self.terms().total()
    }

    pub fn terms(&self) -> ObjectiveTerms<T> {
        objective_terms(self.caches, self.zs, self.delta, self.p, self.alpha, self.beta)
            .expect("snapshot shapes are consistent")
    }
}

/// Hooks into the optimization loop; all methods default to no-ops.
pub trait Observer<T: Real> {
    /// One `(Q, P, F)` sweep inside the rank loop.
    fn p_sweep(&mut self, _sweep: &PSweep<T>) {}

    /// Every embedding computed for a `P` (or `B`) graph.
    fn embedding(&mut self, _graph: &Mat<T>, _emb: &SpectralEmbedding<T>) {}

    fn after_update(&mut self, _snapshot: &Snapshot<'_, T>) {}
}

pub struct NoObserver;

impl<T: Real> Observer<T> for NoObserver {}

/// Clusters `ds` into `cfg.c` groups.
pub fn fit<T: Real>(ds: &MultiViewDataset<T>, cfg: &SolverConfig) -> Result<(ClusterLabels, SolverState<T>)> {
    fit_with_observer(ds, cfg, &mut NoObserver)
}

pub fn fit_with_observer<T: Real>(
    ds: &MultiViewDataset<T>,
    cfg: &SolverConfig,
    observer: &mut dyn Observer<T>,
) -> Result<(ClusterLabels, SolverState<T>)> {
    let n = ds.n_samples();
    cfg.validate(n)?;
    let (c, m, k) = (cfg.c, cfg.anchors(), cfg.neighbours());
    let (alpha, beta) = (T::lit(cfg.alpha), T::lit(cfg.beta));
    let opts = cfg.alm_options::<T>();
    let mut timings = StageTimings::default();

    let clock = Instant::now();
    let data = normalize(ds, cfg.normalization);
    timings.normalize = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let anchors = build_anchors(&data, m, cfg.seed, cfg.kmeans_max_iter)?;
    timings.anchors = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let caches = data
        .views()
        .iter()
        .zip(&anchors.per_view)
        .map(|(x, a)| ViewCache::new(x, a))
        .collect::<Result<Vec<_>>>()?;
    let mut zs = data
        .views()
        .iter()
        .zip(&anchors.per_view)
        .map(|(x, a)| knn_bipartite_init(x, a, k))
        .collect::<Result<Vec<_>>>()?;
    let n_views = zs.len();
    let mut delta = vec![T::one() / T::from_usize_lossy(n_views); n_views];

    if cfg.variant == Variant::TwoPhase {
        zs = learn_views_uncoupled(&caches, zs, &delta, alpha, cfg, &opts)?;
    }

    let mut p = blend(&zs, &delta)?;
    let mut embedding = update_f(&p, c)?;
    observer.embedding(&p, &embedding);
    let mut gamma = T::lit(cfg.gamma0);
    let mut trace = vec![objective_terms(&caches, &zs, &delta, &p, alpha, beta)?.total()];
    timings.init = clock.elapsed().as_secs_f64();

    macro_rules! notify {
        ($stage:expr, $it:expr) => {
            observer.after_update(&Snapshot {
                stage: $stage,
                iteration: $it,
                zs: &zs,
                p: &p,
                delta: &delta,
                embedding: &embedding,
                gamma,
                caches: &caches,
                alpha,
                beta,
            })
        };
    }
    notify!(Stage::Init, 0);

    let clock = Instant::now();
    let mut iterations = 0;
    let mut converged = false;
    let mut p_inner_iterations = Vec::new();
    let mut iteration_seconds = Vec::new();
    let mut components = count_components(&p, T::lit(EDGE_EPS));
    for it in 1..=cfg.outer_max_iter {
        let tick = Instant::now();
        let b = blend(&zs, &delta)?;
        let start = if cfg.reset_gamma { T::lit(cfg.gamma0) } else { gamma };
        let up = update_p_observed(&b, c, cfg, start, observer)?;
        p = up.p;
        embedding = up.embedding;
        gamma = up.gamma;
        components = up.components;
        p_inner_iterations.push(up.inner_iterations);
        notify!(Stage::P, it);

        if cfg.variant == Variant::Full {
            for v in 0..n_views {
                let z = update_z_cached(v, &caches[v], &zs, &delta, &p, alpha, beta, &opts)?;
                zs[v] = z;
                notify!(Stage::Z(v), it);
            }
        }

        delta = update_delta(&zs, &p, &delta, cfg.reset_delta, &opts)?;
        notify!(Stage::Delta, it);

        let obj = objective_terms(&caches, &zs, &delta, &p, alpha, beta)?.total();
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(obj);
        iterations = it;
        iteration_seconds.push(tick.elapsed().as_secs_f64());
        if relative_change(prev, obj) < T::lit(cfg.outer_tol) {
            converged = true;
            break;
        }
    }
    timings.optimize = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let labels = extract_labels(&p, T::lit(EDGE_EPS), c)?;
    let p = ConsensusBipartiteGraph::new(p)?;
    debug_assert_eq!(p.components(), components);
    timings.labels = clock.elapsed().as_secs_f64();

    let state = SolverState {
        zs,
        p,
        delta,
        embedding,
        gamma,
        objective_trace: trace,
        iterations,
        converged,
        p_inner_iterations,
        iteration_seconds,
        timings,
        anchors,
    };
    Ok((labels, state))
}

/// `|new − old| / max(|old|, ε)`.
pub fn relative_change<T: Real>(old: T, new: T) -> T {
    (new - old).abs() / old.abs().max(T::lit(1e-12))
}

/// First phase of the two-phase variant: every `Z⁽ᵛ⁾` minimizes its own
/// reconstruction and ridge terms, with no fusion coupling.
fn learn_views_uncoupled<T: Real>(
    caches: &[ViewCache<T>],
    mut zs: Vec<ViewBipartiteGraph<T>>,
    delta: &[T],
    alpha: T,
    cfg: &SolverConfig,
    opts: &AlmOptions<T>,
) -> Result<Vec<ViewBipartiteGraph<T>>> {
    let b = blend(&zs, delta)?;
    let value = |zs: &[ViewBipartiteGraph<T>]| -> Result<T> {
        Ok(objective_terms(caches, zs, delta, &b, alpha, T::zero())?.total())
    };
    let mut prev = value(&zs)?;
    for _ in 0..cfg.outer_max_iter {
        for v in 0..zs.len() {
            let z = update_z_cached(v, &caches[v], &zs, delta, &b, alpha, T::zero(), opts)?;
            zs[v] = z;
        }
        let cur = value(&zs)?;
        if relative_change(prev, cur) < T::lit(cfg.outer_tol) {
            break;
        }
        prev = cur;
    }
    Ok(zs)
}
