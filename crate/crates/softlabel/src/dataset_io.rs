//! Reading and writing disagreement datasets.
//!
//! JSON follows the shared-task layout: one object keyed by instance id, each value
//! holding `text`, optional `annotations` (array of 0/1, or the comma-separated string
//! used by the official releases), `soft_label` (`{"0": p0, "1": p1}` or a bare `p1`),
//! optional `hard_label` and optional `split`. CSV has the header
//! `id,text,annotations,soft_label,hard_label` with pipe-separated votes and an
//! optional trailing `split` column.
//!
//! Records without a `split` take it from the file name (`*_train.json`,
//! `*_dev.json`, `*_test.json`, ...).

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use softlabel_core::data::{DisagreementDataset, Instance, Split};

use crate::error::{Error, Result};

/// Allowed deviation of `p0 + p1` from one.
const PAIR_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    #[default]
    #[serde(alias = "lewidi_json")]
    #[value(alias = "lewidi-json")]
    Json,
    Csv,
}

impl DatasetFormat {
    /// Guesses from the extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Json,
        }
    }
}

/// Split implied by a file name such as `corpus_dev.json`.
pub fn split_from_file_name(path: &Path) -> Option<Split> {
    let stem = path.file_stem()?.to_str()?.to_ascii_lowercase();
    stem.rsplit(['_', '-', '.']).next().and_then(Split::parse)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAnnotations {
    List(Vec<Value>),
    Joined(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSoftLabel {
    Scalar(f64),
    Pair(Map<String, Value>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawBinary {
    Int(i64),
    Text(String),
}

#[derive(Deserialize)]
struct JsonRecord {
    text: String,
    #[serde(default)]
    annotations: Option<RawAnnotations>,
    #[serde(default)]
    soft_label: Option<RawSoftLabel>,
    #[serde(default)]
    hard_label: Option<RawBinary>,
    #[serde(default)]
    split: Option<String>,
}

fn parse_vote(v: &str) -> std::result::Result<u8, String> {
    match v.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(format!("annotation {other:?} is not 0 or 1")),
    }
}

fn parse_votes(joined: &str, sep: char) -> std::result::Result<Vec<u8>, String> {
    joined
        .split(sep)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_vote)
        .collect()
}

fn json_votes(raw: RawAnnotations) -> std::result::Result<Vec<u8>, String> {
    match raw {
        RawAnnotations::Joined(s) => parse_votes(&s, ','),
        RawAnnotations::List(items) => items
            .iter()
            .map(|v| match v {
                Value::Number(n) => parse_vote(&n.to_string()),
                Value::String(s) => parse_vote(s),
                other => Err(format!("annotation {other} is not 0 or 1")),
            })
            .collect(),
    }
}

fn json_soft(raw: RawSoftLabel) -> std::result::Result<f64, String> {
    match raw {
        RawSoftLabel::Scalar(p) => Ok(p),
        RawSoftLabel::Pair(map) => {
            let get = |k: &str| {
                map.get(k)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| format!("soft_label is missing numeric key \"{k}\""))
            };
            let (p0, p1) = (get("0")?, get("1")?);
            if (p0 + p1 - 1.0).abs() > PAIR_TOLERANCE {
                return Err(format!("soft_label components sum to {}, not 1", p0 + p1));
            }
            Ok(p1)
        }
    }
}

fn binary(raw: RawBinary) -> std::result::Result<u8, String> {
    match raw {
        RawBinary::Int(0) => Ok(0),
        RawBinary::Int(1) => Ok(1),
        RawBinary::Int(other) => Err(format!("hard_label {other} is not 0 or 1")),
        RawBinary::Text(s) => parse_vote(&s).map_err(|_| format!("hard_label {s:?} is not 0 or 1")),
    }
}

fn resolve_split(path: &Path, id: &str, explicit: Option<&str>, default: Option<Split>) -> Result<Split> {
    match explicit.filter(|s| !s.trim().is_empty()) {
        Some(s) => Split::parse(s).ok_or_else(|| Error::dataset(path, format!("instance {id}: unknown split {s:?}"))),
        None => default.ok_or_else(|| {
            Error::dataset(
                path,
                format!("instance {id}: no split field and none implied by the file name"),
            )
        }),
    }
}

fn instance_error(path: &Path, id: &str, reason: String) -> Error {
    Error::dataset(path, format!("instance {id}: {reason}"))
}

fn read_json(path: &Path, default: Option<Split>) -> Result<Vec<(Split, Instance)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let records: Map<String, Value> =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::dataset(path, e))?;
    let mut out = Vec::with_capacity(records.len());
    for (id, value) in records {
        let rec: JsonRecord = serde_json::from_value(value).map_err(|e| instance_error(path, &id, e.to_string()))?;
        let votes = match rec.annotations {
            Some(raw) => json_votes(raw).map_err(|e| instance_error(path, &id, e))?,
            None => Vec::new(),
        };
        let soft = rec
            .soft_label
            .map(json_soft)
            .transpose()
            .map_err(|e| instance_error(path, &id, e))?;
        let hard = rec
            .hard_label
            .map(binary)
            .transpose()
            .map_err(|e| instance_error(path, &id, e))?;
        let split = resolve_split(path, &id, rec.split.as_deref(), default)?;
        out.push((split, Instance::new(id, rec.text, votes, soft, hard)?));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    id: String,
    text: String,
    #[serde(default)]
    annotations: Option<String>,
    #[serde(default)]
    soft_label: Option<f64>,
    #[serde(default)]
    hard_label: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<String>,
}

fn read_csv(path: &Path, default: Option<Split>) -> Result<Vec<(Split, Instance)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::dataset(path, format!("{other:?}")),
        })?;
    let mut out = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.map_err(|e| Error::dataset(path, e))?;
        let votes = match row.annotations.as_deref() {
            Some(s) => parse_votes(s, '|').map_err(|e| instance_error(path, &row.id, e))?,
            None => Vec::new(),
        };
        let split = resolve_split(path, &row.id, row.split.as_deref(), default)?;
        out.push((
            split,
            Instance::new(row.id, row.text, votes, row.soft_label, row.hard_label)?,
        ));
    }
    Ok(out)
}

/// Reads the tagged instances of one file.
pub fn read_instances(path: &Path, format: DatasetFormat) -> Result<Vec<(Split, Instance)>> {
    let default = split_from_file_name(path);
    match format {
        DatasetFormat::Json => read_json(path, default),
        DatasetFormat::Csv => read_csv(path, default),
    }
}

/// Loads a single dataset file.
pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<DisagreementDataset> {
    load_dataset_files(&[path.as_ref().to_path_buf()], format)
}

/// Loads and merges several files, e.g. the train, dev and test files of one release.
pub fn load_dataset_files(paths: &[PathBuf], format: DatasetFormat) -> Result<DisagreementDataset> {
    let mut all = Vec::new();
    for path in paths {
        all.extend(read_instances(path, format)?);
    }
    Ok(DisagreementDataset::from_tagged(all)?)
}

fn json_value(split: Split, inst: &Instance) -> Value {
    let mut obj = Map::new();
    obj.insert("text".into(), Value::from(inst.text.clone()));
    if !inst.annotations.is_empty() {
        obj.insert("annotations".into(), Value::from(inst.annotations.clone()));
    }
    let mut soft = Map::new();
    soft.insert("0".into(), Value::from(1.0 - inst.soft_label));
    soft.insert("1".into(), Value::from(inst.soft_label));
    obj.insert("soft_label".into(), Value::Object(soft));
    obj.insert("hard_label".into(), Value::from(inst.hard_label));
    obj.insert("split".into(), Value::from(split.name()));
    Value::Object(obj)
}

/// Writes the canonical single-file JSON form, every record tagged with its split.
pub fn write_json(dataset: &DisagreementDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut root = Map::new();
    for (split, inst) in dataset.iter_tagged() {
        root.insert(inst.id.clone(), json_value(split, inst));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &Value::Object(root)).map_err(|e| Error::dataset(path, e))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_csv(dataset: &DisagreementDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::dataset(path, e))?;
    for (split, inst) in dataset.iter_tagged() {
        let votes: Vec<String> = inst.annotations.iter().map(u8::to_string).collect();
        w.serialize(CsvRow {
            id: inst.id.clone(),
            text: inst.text.clone(),
            annotations: Some(votes.join("|")),
            soft_label: Some(inst.soft_label),
            hard_label: Some(inst.hard_label),
            split: Some(split.name().into()),
        })
        .map_err(|e| Error::dataset(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset(dataset: &DisagreementDataset, path: impl AsRef<Path>, format: DatasetFormat) -> Result<()> {
    match format {
        DatasetFormat::Json => write_json(dataset, path),
        DatasetFormat::Csv => write_csv(dataset, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_names_from_files() {
        assert_eq!(
            split_from_file_name(Path::new("data/corpus_train.json")),
            Some(Split::Train)
        );
        assert_eq!(
            split_from_file_name(Path::new("corpus_dev.json")),
            Some(Split::Validation)
        );
        assert_eq!(split_from_file_name(Path::new("x-test.csv")), Some(Split::Test));
        assert_eq!(split_from_file_name(Path::new("synth.json")), None);
    }

    #[test]
    fn vote_parsing() {
        assert_eq!(parse_votes("1,0, 0", ',').unwrap(), vec![1, 0, 0]);
        assert_eq!(parse_votes("", '|').unwrap(), Vec::<u8>::new());
        assert!(parse_votes("1|2", '|').is_err());
    }
}
