//! Per-view anchors from k-means on the concatenated features.

use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::numerics::kmeans;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet<T> {
    /// `d_v × m` per view; column `j` of every view is a slice of the same
    /// concatenated center.
    pub per_view: Vec<Mat<T>>,
    pub m: usize,
}

impl<T: Real> AnchorSet<T> {
    pub fn view(&self, v: usize) -> &Mat<T> {
        &self.per_view[v]
    }
}

/// Runs k-means with `m` centers on the stacked `(Σ d_v) × n` matrix and
/// splits every center back into view blocks.
pub fn build_anchors<T: Real>(ds: &MultiViewDataset<T>, m: usize, seed: u64, max_iter: usize) -> Result<AnchorSet<T>> {
    if m == 0 || m > ds.n_samples() {
        return Err(Error::InvalidArgument(format!(
            "anchor count must satisfy 1 <= m <= n, got m = {m}, n = {}",
            ds.n_samples()
        )));
    }
    let stacked = ds.concatenated();
    let km = kmeans(&stacked, m, seed, max_iter)?;
    let mut per_view = Vec::with_capacity(ds.n_views());
    let mut offset = 0;
    for d in ds.dims() {
        per_view.push(Mat::from_fn(d, m, |r, j| km.centers[(offset + r, j)]));
        offset += d;
    }
    Ok(AnchorSet { per_view, m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_blobs;
    use crate::dataset::BlobSpec;

    fn two_view() -> MultiViewDataset<f64> {
        generate_blobs(&BlobSpec::new(12, 3, vec![2, 3], 0.2, 4)).unwrap().dataset
    }

    #[test]
    fn shapes_follow_views() {
        let a = build_anchors(&two_view(), 4, 0, 100).unwrap();
        assert_eq!(a.per_view[0].shape(), (2, 4));
        assert_eq!(a.per_view[1].shape(), (3, 4));
    }

    #[test]
    fn m_equals_n_recovers_samples() {
        let ds = two_view();
        let a = build_anchors(&ds, 12, 1, 100).unwrap();
        for j in 0..12 {
            let sample: Vec<f64> = ds.view(0).col(j).into_iter().chain(ds.view(1).col(j)).collect();
            let hit = (0..12).any(|k| {
                let anchor: Vec<f64> = a.per_view[0].col(k).into_iter().chain(a.per_view[1].col(k)).collect();
                anchor == sample
            });
            assert!(hit, "sample {j} is not an anchor");
        }
    }

    #[test]
    fn split_matches_concatenated_kmeans() {
        let ds = two_view();
        let a = build_anchors(&ds, 5, 7, 100).unwrap();
        let km = kmeans(&ds.concatenated(), 5, 7, 100).unwrap();
        for j in 0..5 {
            let joined: Vec<f64> = a.per_view[0].col(j).into_iter().chain(a.per_view[1].col(j)).collect();
            assert_eq!(joined, km.centers.col(j));
        }
    }

    #[test]
    fn too_many_anchors() {
        assert!(build_anchors(&two_view(), 13, 0, 10).is_err());
    }
}
