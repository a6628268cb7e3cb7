//! External clustering quality: NMI, best-bijection accuracy and purity.

use serde::Serialize;

use crate::dataset::ClusterLabels;
use crate::error::{Error, Result};

/// Co-occurrence counts, `counts[k][j]` = samples with prediction `k` and
/// truth `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub n: u64,
}

impl ContingencyTable {
    pub fn new(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<Self> {
        Self::from_slices(pred.assignments(), truth.assignments())
    }

    /// Label ids need not be dense; the table is sized by the largest id.
    pub fn from_slices(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch { left: pred.len(), right: truth.len() });
        }
        let kp = pred.iter().max().map_or(0, |&x| x + 1);
        let kt = truth.iter().max().map_or(0, |&x| x + 1);
        let mut counts = vec![vec![0u64; kt]; kp];
        for (&p, &t) in pred.iter().zip(truth) {
            counts[p][t] += 1;
        }
        Ok(Self { counts, n: pred.len() as u64 })
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        let kt = self.counts.first().map_or(0, Vec::len);
        (0..kt).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

fn entropy(totals: &[u64], n: f64) -> f64 {
    totals
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(pred; truth) / sqrt(H(pred) H(truth))`, zero when either entropy is.
pub fn nmi(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<f64> {
    nmi_slices(pred.assignments(), truth.assignments())
}

pub fn nmi_slices(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let t = ContingencyTable::from_slices(pred, truth)?;
    if t.n == 0 {
        return Ok(0.0);
    }
    let n = t.n as f64;
    let rows = t.row_totals();
    let cols = t.col_totals();
    let mut mi = 0.0;
    for (k, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[k] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    let denom = (entropy(&rows, n) * entropy(&cols, n)).sqrt();
    if denom <= 0.0 {
        return Ok(0.0);
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Fraction of samples matched under the best one-to-one relabeling.
pub fn acc(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<f64> {
    acc_slices(pred.assignments(), truth.assignments())
}

pub fn acc_slices(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let t = ContingencyTable::from_slices(pred, truth)?;
    if t.n == 0 {
        return Ok(0.0);
    }
    let kp = t.counts.len();
    let kt = t.col_totals().len();
    let s = kp.max(kt);
    let mut cost = vec![vec![0i64; s]; s];
    for (k, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            cost[k][j] = -(c as i64);
        }
    }
    let assignment = hungarian(&cost);
    let matched: i64 = assignment.iter().enumerate().map(|(i, &j)| -cost[i][j]).sum();
    Ok(matched as f64 / t.n as f64)
}

/// `Σ_k max_j counts[k][j] / n`.
pub fn purity(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<f64> {
    purity_slices(pred.assignments(), truth.assignments())
}

pub fn purity_slices(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let t = ContingencyTable::from_slices(pred, truth)?;
    if t.n == 0 {
        return Ok(0.0);
    }
    let hits: u64 = t.counts.iter().map(|r| r.iter().copied().max().unwrap_or(0)).sum();
    Ok(hits as f64 / t.n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scores {
    pub nmi: f64,
    pub acc: f64,
    pub purity: f64,
}

pub fn evaluate(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<Scores> {
    Ok(Scores { nmi: nmi(pred, truth)?, acc: acc(pred, truth)?, purity: purity(pred, truth)? })
}

/// Minimum-cost perfect matching on a square matrix; entry `i` of the result
/// is the column assigned to row `i`. Shortest augmenting paths with
/// potentials, `O(s³)`.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let s = cost.len();
    if s == 0 {
        return Vec::new();
    }
    assert!(cost.iter().all(|r| r.len() == s), "cost matrix must be square");
    const INF: i64 = i64::MAX / 4;
    // 1-based rows and columns; index 0 is the virtual source
    let mut u = vec![0i64; s + 1];
    let mut v = vec![0i64; s + 1];
    let mut owner = vec![0usize; s + 1];
    let mut way = vec![0usize; s + 1];
    for i in 1..=s {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; s + 1];
        let mut used = vec![false; s + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=s {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=s {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; s];
    for j in 1..=s {
        assignment[owner[j] - 1] = j - 1;
    }
    assignment
}
