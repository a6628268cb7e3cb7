use std::fs;

use udbgl::dataset::{load_views, normalize, synth_blobs, write_views, MultiViewDataset, Normalization};
use udbgl::Error;

#[test]
fn write_then_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ds: MultiViewDataset<f64> = synth_blobs(25, 3, 2, &[3, 5], 0.4, 9).unwrap();
    let manifest = write_views(&ds, dir.path()).unwrap();
    let back: MultiViewDataset<f64> = load_views(&manifest).unwrap();
    assert_eq!(back.dims(), vec![3, 5]);
    assert_eq!(back.labels(), ds.labels());
    for (a, b) in back.views().iter().zip(ds.views()) {
        assert_eq!(a, b);
    }
}

#[test]
fn header_tab_delimiter_and_string_labels() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.tsv"), "f1\tf2\n1\t2\n3\t4\n5\t6\n").unwrap();
    fs::write(dir.path().join("y.tsv"), "label\ncat\ndog\ncat\n").unwrap();
    fs::write(
        dir.path().join("m.json"),
        r#"{"views": ["a.tsv"], "labels": "y.tsv", "delimiter": "\t", "has_header": true}"#,
    )
    .unwrap();
    let ds: MultiViewDataset<f64> = load_views(&dir.path().join("m.json")).unwrap();
    assert_eq!(ds.n_samples(), 3);
    assert_eq!(ds.view(0).row(1), &[2.0, 4.0, 6.0]);
    assert_eq!(ds.labels().unwrap(), &[0, 1, 0]);
}

#[test]
fn numeric_labels_keep_numeric_order() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "1\n2\n3\n4\n").unwrap();
    fs::write(dir.path().join("y.csv"), "10\n2\n10\n7\n").unwrap();
    fs::write(dir.path().join("m.json"), r#"{"views": ["a.csv"], "labels": "y.csv"}"#).unwrap();
    let ds: MultiViewDataset<f64> = load_views(&dir.path().join("m.json")).unwrap();
    assert_eq!(ds.labels().unwrap(), &[2, 0, 2, 1]);
}

#[test]
fn loader_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "1,2\n3,4\n").unwrap();
    fs::write(dir.path().join("b.csv"), "1\n2\n3\n").unwrap();
    fs::write(dir.path().join("c.csv"), "1,x\n3,4\n").unwrap();
    fs::write(dir.path().join("mismatch.json"), r#"{"views": ["a.csv", "b.csv"]}"#).unwrap();
    fs::write(dir.path().join("nonnum.json"), r#"{"views": ["c.csv"]}"#).unwrap();
    fs::write(dir.path().join("missing.json"), r#"{"views": ["nope.csv"]}"#).unwrap();
    let err = load_views::<f64>(&dir.path().join("mismatch.json")).unwrap_err();
    assert!(matches!(err, Error::SampleCountMismatch { .. }));
    assert!(err.to_string().contains("sample count mismatch"));
    assert!(matches!(load_views::<f64>(&dir.path().join("nonnum.json")).unwrap_err(), Error::NonNumeric { .. }));
    assert!(matches!(load_views::<f64>(&dir.path().join("missing.json")).unwrap_err(), Error::Io { .. }));
}

#[test]
fn normalization_bounds() {
    let ds: MultiViewDataset<f64> = synth_blobs(50, 2, 2, &[3, 3], 1.0, 4).unwrap();
    let mm = normalize(&ds, Normalization::MinMax);
    for v in mm.views() {
        for row in v.row_iter() {
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        }
    }
    let z = normalize(&ds, Normalization::ZScore);
    for v in z.views() {
        for row in v.row_iter() {
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / row.len() as f64;
            assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn synthetic_generator_is_seeded() {
    let a: MultiViewDataset<f64> = synth_blobs(30, 3, 2, &[2, 2], 0.1, 1).unwrap();
    let b: MultiViewDataset<f64> = synth_blobs(30, 3, 2, &[2, 2], 0.1, 1).unwrap();
    let c: MultiViewDataset<f64> = synth_blobs(30, 3, 2, &[2, 2], 0.1, 2).unwrap();
    assert_eq!(a.views(), b.views());
    assert_ne!(a.views(), c.views());
    assert_eq!(a.n_classes(), Some(3));
}
