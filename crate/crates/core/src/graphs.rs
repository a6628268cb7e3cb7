//! Sample–anchor bipartite graphs: invariants, degrees, connectivity,
//! K-NN initialization and label extraction.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::ClusterLabels;
use crate::error::{Error, Result};
use crate::linalg::{sq_dist, Mat};
use crate::scalar::Real;

/// Edge-presence threshold on `p_ij`.
pub const EDGE_EPS: f64 = 1e-8;
/// Degrees are floored here before `D^{-1/2}` is formed.
pub const DEGREE_FLOOR: f64 = 1e-12;
/// Entries down to `-NEG_CLAMP` are treated as rounding and clamped to zero.
pub const NEG_CLAMP: f64 = 1e-12;
/// Allowed deviation of a row sum from one.
pub const ROW_SUM_TOL: f64 = 1e-8;

/// Clamps rounding-level negatives and checks rows lie on the simplex.
fn check_row_stochastic<T: Real>(weights: &mut Mat<T>, what: &str) -> Result<()> {
    let clamp = T::lit(NEG_CLAMP);
    let tol = T::lit(ROW_SUM_TOL).max(T::epsilon() * T::from_usize_lossy(weights.cols().max(1)) * T::lit(4.0));
    for (i, row) in weights.rows_mut().enumerate() {
        let mut sum = T::zero();
        for x in row.iter_mut() {
            if !x.is_finite() || *x < -clamp {
                return Err(Error::InvalidArgument(format!("{what}: entry {x} in row {i} is not a valid weight")));
            }
            if *x < T::zero() {
                *x = T::zero();
            }
            sum += *x;
        }
        if (sum - T::one()).abs() > tol {
            return Err(Error::InvalidArgument(format!("{what}: row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// View-specific graph `Z^(v)`: `n × m`, non-negative, row-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewBipartiteGraph<T> {
    weights: Mat<T>,
}

impl<T: Real> ViewBipartiteGraph<T> {
    pub fn new(mut weights: Mat<T>) -> Result<Self> {
        check_row_stochastic(&mut weights, "view graph")?;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &Mat<T> {
        &self.weights
    }

    pub fn into_weights(self) -> Mat<T> {
        self.weights
    }
}

/// Connected-component counts of the `(n + m)`-node graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCount {
    /// All components, isolated anchors included; this is the eigenvalue-0
    /// multiplicity of the normalized Laplacian.
    pub full: usize,
    /// Components containing at least one sample.
    pub sample_bearing: usize,
    /// Anchors with no incident edge.
    pub isolated_anchors: usize,
}

/// View-consensus graph `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusBipartiteGraph<T> {
    weights: Mat<T>,
    components: ComponentCount,
}

impl<T: Real> ConsensusBipartiteGraph<T> {
    pub fn new(mut weights: Mat<T>) -> Result<Self> {
        check_row_stochastic(&mut weights, "consensus graph")?;
        let components = count_components(&weights, T::lit(EDGE_EPS));
        Ok(Self { weights, components })
    }

    pub fn weights(&self) -> &Mat<T> {
        &self.weights
    }

    pub fn components(&self) -> ComponentCount {
        self.components
    }

    pub fn labels(&self, c: usize) -> Result<ClusterLabels> {
        extract_labels(&self.weights, T::lit(EDGE_EPS), c)
    }

    /// Dense CSV dump, `n` rows of `m` weights.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for row in self.weights.row_iter() {
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    text.push(',');
                }
                text.push_str(&x.to_string());
            }
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Spectral embedding `F = [F_(n); F_(m)]` with `FᵀF = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding<T> {
    /// `n × c`.
    pub f_n: Mat<T>,
    /// `m × c`.
    pub f_m: Mat<T>,
    /// Top singular values of the degree-normalized graph.
    pub sigma: Vec<T>,
}

impl<T: Real> SpectralEmbedding<T> {
    /// `Tr(Fᵀ L̃_S F) = c − Σ σ_i`.
    pub fn trace_term(&self) -> T {
        T::from_usize_lossy(self.sigma.len()) - self.sigma.iter().copied().sum::<T>()
    }

    /// `F_(n)ᵀF_(n) + F_(m)ᵀF_(m)`.
    pub fn gram(&self) -> Mat<T> {
        let a = self.f_n.t_matmul(&self.f_n);
        let b = self.f_m.t_matmul(&self.f_m);
        Mat::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] + b[(i, j)])
    }
}

/// Floored row and column sums of a bipartite weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Degrees<T> {
    pub n: Vec<T>,
    pub m: Vec<T>,
}

pub fn degrees<T: Real>(p: &Mat<T>) -> Degrees<T> {
    let floor = T::lit(DEGREE_FLOOR);
    Degrees {
        n: p.row_sums().into_iter().map(|d| d.max(floor)).collect(),
        m: p.col_sums().into_iter().map(|d| d.max(floor)).collect(),
    }
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Nodes `0..n` are samples, `n..n+m` anchors.
fn connect<T: Real>(p: &Mat<T>, eps: T) -> DisjointSet {
    let n = p.rows();
    let mut dsu = DisjointSet::new(n + p.cols());
    for (i, row) in p.row_iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if w > eps {
                dsu.union(i, n + j);
            }
        }
    }
    dsu
}

/// Counts connected components of the graph with edges `p_ij > eps`.
pub fn count_components<T: Real>(p: &Mat<T>, eps: T) -> ComponentCount {
    let (n, m) = p.shape();
    let mut dsu = connect(p, eps);
    let mut is_root_with_sample = vec![false; n + m];
    let mut sample_bearing = 0;
    for i in 0..n {
        let r = dsu.find(i);
        if !is_root_with_sample[r] {
            is_root_with_sample[r] = true;
            sample_bearing += 1;
        }
    }
    let mut isolated_anchors = 0;
    let mut anchor_only = 0;
    let mut seen = vec![false; n + m];
    for j in n..n + m {
        let r = dsu.find(j);
        if is_root_with_sample[r] || seen[r] {
            continue;
        }
        seen[r] = true;
        anchor_only += 1;
        if r == j {
            isolated_anchors += 1;
        }
    }
    ComponentCount { full: sample_bearing + anchor_only, sample_bearing, isolated_anchors }
}

/// Each sample's `k` nearest anchors get weight `1/k`; ties go to the lower
/// anchor index. `x` is `d × n`, `anchors` is `d × m`.
pub fn knn_bipartite_init<T: Real>(x: &Mat<T>, anchors: &Mat<T>, k: usize) -> Result<ViewBipartiteGraph<T>> {
    let m = anchors.cols();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("K-NN init needs 1 <= K <= m, got K = {k}, m = {m}")));
    }
    if x.rows() != anchors.rows() {
        return Err(Error::LengthMismatch { left: x.rows(), right: anchors.rows() });
    }
    let samples = x.transpose();
    let cols = anchors.transpose();
    let w = T::one() / T::from_usize_lossy(k);
    let mut z = Mat::zeros(samples.rows(), m);
    let mut order: Vec<(T, usize)> = Vec::with_capacity(m);
    for (i, s) in samples.row_iter().enumerate() {
        order.clear();
        order.extend(cols.row_iter().enumerate().map(|(j, a)| (sq_dist(s, a), j)));
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        for &(_, j) in order.iter().take(k) {
            z[(i, j)] = w;
        }
    }
    ViewBipartiteGraph::new(z)
}

/// Labels every sample by its connected component; component ids follow the
/// order of each component's smallest sample index.
pub fn extract_labels<T: Real>(p: &Mat<T>, eps: T, c: usize) -> Result<ClusterLabels> {
    let n = p.rows();
    let mut dsu = connect(p, eps);
    let mut ids = vec![usize::MAX; n + p.cols()];
    let mut next = 0;
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let r = dsu.find(i);
        if ids[r] == usize::MAX {
            ids[r] = next;
            next += 1;
        }
        labels.push(ids[r]);
    }
    if next != c {
        return Err(Error::ComponentMismatch { expected: c, found: next });
    }
    ClusterLabels::new(labels, c)
}
