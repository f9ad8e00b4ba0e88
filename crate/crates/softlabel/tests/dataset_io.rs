use std::fs;
use std::path::{Path, PathBuf};

use softlabel::dataset_io::{load_dataset, load_dataset_files, split_from_file_name, write_dataset, DatasetFormat};
use softlabel::Error;
use softlabel_core::data::{synthesize_dataset, Split, SynthSpec};

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn dataset_message(err: Error) -> String {
    match err {
        Error::Dataset { reason, .. } => reason,
        Error::Core(e) => e.to_string(),
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn both_soft_label_encodings_load() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "mini_train.json",
        r#"{
            "1": {"text": "first", "annotations": [1, 0, 0], "soft_label": {"0": 0.6666666666666667, "1": 0.3333333333333333}, "hard_label": 0},
            "2": {"text": "second", "annotations": "1,1,0", "soft_label": 0.6666666666666666, "hard_label": "1"},
            "3": {"text": "third", "annotations": [0, 0, 0]}
        }"#,
    );
    let data = load_dataset(&p, DatasetFormat::Json).unwrap();
    assert_eq!(data.train().len(), 3);
    assert_eq!(data.annotator_count(), Some(3));
    let by_id = |id: &str| data.train().iter().find(|i| i.id == id).unwrap();
    assert!((by_id("1").soft_label - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(by_id("2").hard_label, 1);
    assert_eq!((by_id("3").soft_label, by_id("3").hard_label), (0.0, 0));
}

#[test]
fn explicit_soft_label_without_votes_is_kept() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "x_dev.json",
        r#"{"a": {"text": "t", "annotations": [], "soft_label": 0.75}}"#,
    );
    let data = load_dataset(&p, DatasetFormat::Json).unwrap();
    let inst = &data.validation()[0];
    assert_eq!((inst.soft_label, inst.hard_label), (0.75, 1));
    assert_eq!(data.annotator_count(), None);
}

#[test]
fn mixed_annotator_counts_have_no_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "mixed_test.json",
        r#"{"a": {"text": "t", "annotations": [1,0,0]}, "b": {"text": "u", "annotations": [1,0,0,1]}}"#,
    );
    assert_eq!(load_dataset(&p, DatasetFormat::Json).unwrap().annotator_count(), None);
}

#[test]
fn bad_records_name_the_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"bad-pair": {"text": "t", "soft_label": {"0": 0.5, "1": 0.6}}}"#,
            "bad-pair",
        ),
        (r#"{"bad-vote": {"text": "t", "annotations": [1, 2]}}"#, "bad-vote"),
        (r#"{"bad-range": {"text": "t", "soft_label": 1.5}}"#, "bad-range"),
        (
            r#"{"bad-mix": {"text": "t", "annotations": [1,0,0], "soft_label": 0.9}}"#,
            "bad-mix",
        ),
    ];
    for (i, (text, id)) in cases.iter().enumerate() {
        let p = write(dir.path(), &format!("case{i}_train.json"), text);
        let err = load_dataset(&p, DatasetFormat::Json).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
        assert!(dataset_message(err).contains(id), "case {id}");
    }
}

#[test]
fn split_comes_from_field_or_file_name() {
    assert_eq!(
        split_from_file_name(Path::new("corpus_dev.json")),
        Some(Split::Validation)
    );
    assert_eq!(split_from_file_name(Path::new("corpus_train.json")), Some(Split::Train));
    assert_eq!(split_from_file_name(Path::new("md-test.csv")), Some(Split::Test));
    assert_eq!(split_from_file_name(Path::new("corpus.json")), None);

    let dir = tempfile::tempdir().unwrap();
    let train = write(
        dir.path(),
        "d_train.json",
        r#"{"a": {"text": "x", "annotations": [1,0]}}"#,
    );
    let dev = write(
        dir.path(),
        "d_dev.json",
        r#"{"b": {"text": "y", "annotations": [1,1]}}"#,
    );
    let tagged = write(
        dir.path(),
        "corpus.json",
        r#"{"c": {"text": "z", "annotations": [0,0], "split": "test"}}"#,
    );
    let data = load_dataset_files(&[train, dev, tagged], DatasetFormat::Json).unwrap();
    assert_eq!(
        (data.train().len(), data.validation().len(), data.test().len()),
        (1, 1, 1)
    );

    let untagged = write(dir.path(), "corpus2.json", r#"{"c": {"text": "z"}}"#);
    assert_eq!(load_dataset(&untagged, DatasetFormat::Json).unwrap_err().exit_code(), 3);
}

#[test]
fn duplicate_ids_across_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "d_train.json",
        r#"{"x": {"text": "t", "annotations": [1]}}"#,
    );
    let b = write(dir.path(), "d_test.json", r#"{"x": {"text": "u", "annotations": [0]}}"#);
    let err = load_dataset_files(&[a, b], DatasetFormat::Json).unwrap_err();
    assert_eq!(err.kind(), "duplicate_id");
}

#[test]
fn csv_rows_load() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "rows.csv",
        "id,text,annotations,soft_label,hard_label,split\n\
         r1,\"hello, world\",1|0|1,,,train\n\
         r2,bye,,0.25,0,test\n",
    );
    let data = load_dataset(&p, DatasetFormat::Csv).unwrap();
    assert_eq!(data.train()[0].text, "hello, world");
    assert!((data.train()[0].soft_label - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(data.test()[0].soft_label, 0.25);
}

#[test]
fn synthetic_data_round_trips_through_both_formats() {
    let data = synthesize_dataset(&SynthSpec {
        n_train: 30,
        n_val: 10,
        n_test: 10,
        a: 3,
        seed: 11,
        noise: 0.1,
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, format) in [("all.json", DatasetFormat::Json), ("all.csv", DatasetFormat::Csv)] {
        let p = dir.path().join(name);
        write_dataset(&data, &p, format).unwrap();
        let back = load_dataset(&p, format).unwrap();
        for split in Split::ALL {
            let (mut x, mut y) = (data.split(split).to_vec(), back.split(split).to_vec());
            x.sort_by(|l, r| l.id.cmp(&r.id));
            y.sort_by(|l, r| l.id.cmp(&r.id));
            assert_eq!(x, y, "{name} {split:?}");
        }
        assert_eq!(back.annotator_count(), Some(3));
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_dataset("/nonexistent/x_train.json", DatasetFormat::Json).unwrap_err();
    assert_eq!((err.kind(), err.exit_code()), ("io", 3));
}
