//! Multi-view datasets: loading, writing, normalization and synthetic blobs.
//!
//! Files store one sample per row; in memory every view is `d_v × n`
//! (features × samples).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset<T> {
    views: Vec<Mat<T>>,
    n: usize,
    labels: Option<Vec<usize>>,
}

impl<T: Real> MultiViewDataset<T> {
    /// Validates shapes and finiteness. `views[v]` is `d_v × n`.
    pub fn new(views: Vec<Mat<T>>, labels: Option<Vec<usize>>) -> Result<Self> {
        let first = views.first().ok_or_else(|| Error::EmptyView("dataset has no views".into()))?;
        let n = first.cols();
        if n == 0 {
            return Err(Error::EmptyView("view 0 has no samples".into()));
        }
        for (v, x) in views.iter().enumerate() {
            if x.cols() != n {
                return Err(Error::SampleCountMismatch { view: v, expected: n, found: x.cols() });
            }
            if x.rows() == 0 {
                return Err(Error::EmptyView(format!("view {v} has no features")));
            }
            if !x.is_finite() {
                return Err(Error::NonFinite { view: v });
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::LabelCount { expected: n, found: l.len() });
            }
        }
        Ok(Self { views, n, labels })
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn views(&self) -> &[Mat<T>] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &Mat<T> {
        &self.views[v]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(Mat::rows).collect()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of distinct classes in the attached labels.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().max().map_or(0, |&m| m + 1))
    }

    /// Stacks all views into one `(Σ d_v) × n` matrix.
    pub fn concatenated(&self) -> Mat<T> {
        let total: usize = self.views.iter().map(Mat::rows).sum();
        let mut out = Mat::zeros(total, self.n);
        let mut offset = 0;
        for x in &self.views {
            for r in 0..x.rows() {
                out.row_mut(offset + r).copy_from_slice(x.row(r));
            }
            offset += x.rows();
        }
        out
    }

    /// Keeps the samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let views = self
            .views
            .iter()
            .map(|x| Mat::from_fn(x.rows(), indices.len(), |r, c| x[(r, indices[c])]))
            .collect();
        let labels = self.labels.as_ref().map(|l| remap_dense(&indices.iter().map(|&i| l[i]).collect::<Vec<_>>()));
        Self::new(views, labels)
    }

    pub fn cast<U: Real>(&self) -> MultiViewDataset<U> {
        MultiViewDataset { views: self.views.iter().map(Mat::cast).collect(), n: self.n, labels: self.labels.clone() }
    }
}

/// Final clustering: one id in `[0, n_clusters)` per sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabels {
    assignments: Vec<usize>,
    n_clusters: usize,
}

impl ClusterLabels {
    pub fn new(assignments: Vec<usize>, n_clusters: usize) -> Result<Self> {
        if let Some(&bad) = assignments.iter().find(|&&a| a >= n_clusters) {
            return Err(Error::InvalidArgument(format!("label {bad} outside [0, {n_clusters})")));
        }
        Ok(Self { assignments, n_clusters })
    }

    /// Uses `max + 1` as the cluster count.
    pub fn from_assignments(assignments: Vec<usize>) -> Self {
        let n_clusters = assignments.iter().max().map_or(0, |&m| m + 1);
        Self { assignments, n_clusters }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    MinMax,
    ZScore,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(Self::MinMax),
            "zscore" => Ok(Self::ZScore),
            other => Err(Error::InvalidArgument(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Per-feature normalization of every view. Constant features map to 0.
pub fn normalize<T: Real>(ds: &MultiViewDataset<T>, scheme: Normalization) -> MultiViewDataset<T> {
    let views = ds
        .views
        .iter()
        .map(|x| {
            let mut out = x.clone();
            for row in out.rows_mut() {
                match scheme {
                    Normalization::MinMax => minmax_row(row),
                    Normalization::ZScore => zscore_row(row),
                }
            }
            out
        })
        .collect();
    MultiViewDataset { views, n: ds.n, labels: ds.labels.clone() }
}

fn minmax_row<T: Real>(row: &mut [T]) {
    let lo = row.iter().copied().fold(T::infinity(), T::min);
    let hi = row.iter().copied().fold(T::neg_infinity(), T::max);
    let span = hi - lo;
    for x in row.iter_mut() {
        *x = if span > T::zero() { (*x - lo) / span } else { T::zero() };
    }
}

fn zscore_row<T: Real>(row: &mut [T]) {
    let n = T::from_usize_lossy(row.len());
    let mean = row.iter().copied().sum::<T>() / n;
    let var = row.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    let sd = var.sqrt();
    for x in row.iter_mut() {
        *x = if sd > T::zero() { (*x - mean) / sd } else { T::zero() };
    }
}

/// On-disk description of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub views: Vec<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    /// Skip one header row in every file.
    #[serde(default)]
    pub has_header: bool,
}

fn default_delimiter() -> String {
    ",".into()
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Manifest { path: path.into(), reason: e.to_string() })
    }

    fn delimiter_byte(&self, path: &Path) -> Result<u8> {
        match self.delimiter.as_bytes() {
            [b] => Ok(*b),
            _ if self.delimiter == "\\t" => Ok(b'\t'),
            _ => Err(Error::Manifest {
                path: path.into(),
                reason: format!("delimiter must be a single byte, got {:?}", self.delimiter),
            }),
        }
    }
}

/// Loads every view listed in the manifest; relative paths resolve against
/// the manifest's directory. Labels are remapped to `0..c` in sorted order.
pub fn load_views<T: Real>(manifest_path: &Path) -> Result<MultiViewDataset<T>> {
    let manifest = Manifest::read(manifest_path)?;
    if manifest.views.is_empty() {
        return Err(Error::Manifest { path: manifest_path.into(), reason: "no views listed".into() });
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let delim = manifest.delimiter_byte(manifest_path)?;
    let mut views = Vec::with_capacity(manifest.views.len());
    let mut n = None;
    for (v, rel) in manifest.views.iter().enumerate() {
        let path = base.join(rel);
        let x: Mat<T> = read_table(&path, delim, manifest.has_header)?;
        match n {
            None => n = Some(x.cols()),
            Some(expected) if expected != x.cols() => {
                return Err(Error::SampleCountMismatch { view: v, expected, found: x.cols() })
            }
            _ => {}
        }
        views.push(x);
    }
    let labels = match &manifest.labels {
        Some(rel) => Some(read_labels(&base.join(rel), delim, manifest.has_header)?),
        None => None,
    };
    MultiViewDataset::new(views, labels)
}

/// Reads a samples-as-rows table and returns it as `d × n`.
fn read_table<T: Real>(path: &Path, delim: u8, has_header: bool) -> Result<Mat<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_io(path, e))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>().map(T::lit).map_err(|_| Error::NonNumeric {
                    path: path.into(),
                    row: r + 1,
                    column: c + 1,
                    value: cell.to_string(),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Ragged { path: path.into(), row: r + 1, expected: first.len(), found: row.len() });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::EmptyView(path.display().to_string()));
    }
    Ok(Mat::from_rows(&rows).transpose())
}

fn read_labels(path: &Path, delim: u8, has_header: bool) -> Result<Vec<usize>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let mut raw = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_io(path, e))?;
        match rec.get(0) {
            Some(s) if !s.is_empty() => raw.push(s.to_string()),
            _ => {}
        }
    }
    Ok(remap_dense_strings(&raw))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Manifest { path: path.into(), reason: format!("{other:?}") },
    }
}

/// Maps raw label strings onto `0..c`: numeric order if every label is an
/// integer, lexicographic otherwise.
fn remap_dense_strings(raw: &[String]) -> Vec<usize> {
    let ints: Option<Vec<i64>> = raw.iter().map(|s| s.parse::<i64>().ok()).collect();
    match ints {
        Some(ints) => {
            let ids: BTreeMap<i64, usize> =
                ints.iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().zip(0..).collect();
            ints.iter().map(|k| ids[k]).collect()
        }
        None => {
            let ids: BTreeMap<&str, usize> =
                raw.iter().map(String::as_str).collect::<std::collections::BTreeSet<_>>().into_iter().zip(0..).collect();
            raw.iter().map(|k| ids[k.as_str()]).collect()
        }
    }
}

fn remap_dense(labels: &[usize]) -> Vec<usize> {
    let ids: BTreeMap<usize, usize> =
        labels.iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().zip(0..).collect();
    labels.iter().map(|k| ids[k]).collect()
}

/// Writes `view_<v>.csv`, `labels.csv` (if any) and `manifest.json` into
/// `dir`; returns the manifest path. Values use shortest round-trip formatting.
pub fn write_views<T: Real>(ds: &MultiViewDataset<T>, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::with_capacity(ds.n_views());
    for (v, x) in ds.views.iter().enumerate() {
        let name = format!("view_{v}.csv");
        let mut text = String::with_capacity(x.rows() * x.cols() * 8);
        for j in 0..x.cols() {
            for r in 0..x.rows() {
                if r > 0 {
                    text.push(',');
                }
                text.push_str(&x[(r, j)].to_string());
            }
            text.push('\n');
        }
        let path = dir.join(&name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        names.push(PathBuf::from(name));
    }
    let labels = match &ds.labels {
        Some(l) => {
            let path = dir.join("labels.csv");
            write_label_file(&path, l)?;
            Some(PathBuf::from("labels.csv"))
        }
        None => None,
    };
    let manifest = Manifest { views: names, labels, delimiter: ",".into(), has_header: false };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// One id per line.
pub fn write_label_file(path: &Path, labels: &[usize]) -> Result<()> {
    let mut text = String::with_capacity(labels.len() * 3);
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parameters of the synthetic Gaussian-blob generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n: usize,
    pub c: usize,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub noise: f64,
    /// Overrides `noise` per view when present.
    #[serde(default)]
    pub view_noise: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

impl BlobSpec {
    pub fn new(n: usize, c: usize, dims: Vec<usize>, noise: f64, seed: u64) -> Self {
        Self { n, c, dims, noise, view_noise: None, seed }
    }
}

/// Generator output together with the true centers (`d_v × c` per view).
#[derive(Debug, Clone)]
pub struct SyntheticBlobs<T> {
    pub dataset: MultiViewDataset<T>,
    pub centers: Vec<Mat<T>>,
}

/// Side of the cube centers are drawn from, and their minimum separation.
const CENTER_BOX: f64 = 10.0;
const CENTER_SEPARATION: f64 = 3.0;

pub fn generate_blobs<T: Real>(spec: &BlobSpec) -> Result<SyntheticBlobs<T>> {
    let BlobSpec { n, c, ref dims, noise, ref view_noise, seed } = *spec;
    if c == 0 || n < c {
        return Err(Error::InvalidArgument(format!("synthetic blobs need n >= c >= 1, got n = {n}, c = {c}")));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidArgument("every view needs at least one feature".into()));
    }
    let noises = match view_noise {
        Some(v) if v.len() != dims.len() => {
            return Err(Error::LengthMismatch { left: dims.len(), right: v.len() });
        }
        Some(v) => v.clone(),
        None => vec![noise; dims.len()],
    };
    if noises.iter().any(|&s| s < 0.0 || !s.is_finite()) {
        return Err(Error::InvalidArgument("noise must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    let mut views = Vec::with_capacity(dims.len());
    let mut centers = Vec::with_capacity(dims.len());
    for (&d, &sigma) in dims.iter().zip(&noises) {
        let ctr = draw_centers(&mut rng, d, c);
        let gauss = Normal::new(0.0, 1.0).expect("unit normal");
        let x = Mat::from_fn(d, n, |r, j| {
            let e: f64 = gauss.sample(&mut rng);
            T::lit(ctr[labels[j]][r] + sigma * e)
        });
        centers.push(Mat::from_fn(d, c, |r, k| T::lit(ctr[k][r])));
        views.push(x);
    }
    Ok(SyntheticBlobs { dataset: MultiViewDataset::new(views, Some(labels))?, centers })
}

/// `c` centers with one draw per view, deterministic given `seed`.
pub fn synth_blobs<T: Real>(
    n: usize,
    c: usize,
    n_views: usize,
    dims: &[usize],
    noise: f64,
    seed: u64,
) -> Result<MultiViewDataset<T>> {
    if dims.len() != n_views {
        return Err(Error::LengthMismatch { left: n_views, right: dims.len() });
    }
    Ok(generate_blobs(&BlobSpec::new(n, c, dims.to_vec(), noise, seed))?.dataset)
}

fn draw_centers(rng: &mut ChaCha8Rng, d: usize, c: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(c);
    while out.len() < c {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..200 {
            let cand: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * CENTER_BOX).collect();
            let sep = out
                .iter()
                .map(|o| o.iter().zip(&cand).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            if sep >= CENTER_SEPARATION {
                best = Some((sep, cand));
                break;
            }
            if best.as_ref().is_none_or(|(s, _)| sep > *s) {
                best = Some((sep, cand));
            }
        }
        out.push(best.expect("at least one candidate").1);
    }
    out
}
