//! The work behind each CLI subcommand, callable without a process boundary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use softlabel_core::data::{synthesize_dataset, DisagreementDataset, SynthSpec};
use softlabel_core::evaluation::{evaluate_detailed, EvaluationReport, Prediction};
use softlabel_core::network::{init_network, HeadNetwork};
use softlabel_core::training::{train, TrainReport};

use crate::checkpoint::{load_checkpoint, save_checkpoint, TrainingMeta};
use crate::config::RunConfig;
use crate::dataset_io::{load_dataset_files, write_dataset, DatasetFormat};
use crate::error::{Error, Result};
use crate::plot::{render, sample_points, Curve};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    #[serde(flatten)]
    pub report: TrainReport,
    pub checkpoint_path: PathBuf,
    pub log_path: PathBuf,
}

pub fn load_run_dataset(cfg: &RunConfig) -> Result<DisagreementDataset> {
    if cfg.data.paths.is_empty() {
        return Err(Error::Config("no dataset paths given ([data] paths)".into()));
    }
    load_dataset_files(&cfg.data.paths, cfg.dataset_format())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e.into()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Trains per `cfg`, writing the epoch log, the best checkpoint and a report into `cfg.out`.
pub fn train_run(cfg: &RunConfig) -> Result<TrainSummary> {
    let data = load_run_dataset(cfg)?;
    let head = cfg.head_config(&data)?;
    let train_cfg = cfg.train_config()?;
    let net = init_network(head, cfg.seed)?;

    create_dir(&cfg.out)?;
    let log_path = cfg.out.join(TRAIN_LOG_FILE);
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| Error::io(&log_path, e))?);
    let mut log_err = None;
    let outcome = train(net, &data, &cfg.featurizer, &train_cfg, |rec| {
        if log_err.is_some() {
            return;
        }
        let line = serde_json::to_string(rec).expect("epoch record serializes");
        if let Err(e) = writeln!(log, "{line}") {
            log_err = Some(e);
        }
    });
    if let Some(e) = log_err {
        return Err(Error::io(&log_path, e));
    }
    log.flush().map_err(|e| Error::io(&log_path, e))?;
    let outcome = outcome?;

    let checkpoint_path = cfg.out.join(CHECKPOINT_FILE);
    let meta = TrainingMeta {
        epoch: outcome.report.best_epoch,
        validation_loss: outcome.report.best_validation_loss,
        seed: cfg.seed,
    };
    save_checkpoint(&outcome.best, Some(meta), &checkpoint_path)?;
    let summary = TrainSummary {
        report: outcome.report,
        checkpoint_path,
        log_path,
    };
    write_json_file(&cfg.out.join(TRAIN_REPORT_FILE), &summary)?;
    Ok(summary)
}

fn checkpoint_or_default(cfg: &RunConfig, checkpoint: Option<&Path>) -> PathBuf {
    checkpoint.map_or_else(|| cfg.out.join(CHECKPOINT_FILE), Path::to_path_buf)
}

/// Loads data and network and runs the configured approach over the configured split.
pub fn predict_split(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<(EvaluationReport, Vec<Prediction>)> {
    let data = load_run_dataset(cfg)?;
    let net: HeadNetwork = load_checkpoint(checkpoint_or_default(cfg, checkpoint))?;
    let approach = cfg.approach_spec(&data)?;
    approach.check_network(&net)?;
    approach.check_dataset(&net, &data)?;
    if net.config().input_dim != cfg.featurizer.dimension {
        return Err(softlabel_core::Error::DimensionMismatch {
            what: "checkpoint input vs featurizer",
            expected: cfg.featurizer.dimension,
            found: net.config().input_dim,
        }
        .into());
    }
    Ok(evaluate_detailed(
        &net,
        &approach,
        data.split(cfg.data.split),
        &cfg.featurizer,
    )?)
}

pub fn report_path(cfg: &RunConfig) -> PathBuf {
    cfg.out
        .join(format!("eval_{}_{}.json", cfg.approach.name(), cfg.data.split.name()))
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for p in predictions {
        let line = serde_json::to_string(p).expect("prediction serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Evaluates and writes the report (and optionally per-instance predictions).
pub fn evaluate_run(cfg: &RunConfig, checkpoint: Option<&Path>, dump: Option<&Path>) -> Result<EvaluationReport> {
    let (report, predictions) = predict_split(cfg, checkpoint)?;
    create_dir(&cfg.out)?;
    write_json_file(&report_path(cfg), &report)?;
    if let Some(dump) = dump {
        write_predictions(dump, &predictions)?;
    }
    Ok(report)
}

pub fn plot_activation(
    curve: &Curve,
    min: f64,
    max: f64,
    samples: usize,
    with_derivative: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let xs = sample_points(min, max, samples)?;
    out.write_all(render(curve, &xs, with_derivative).as_bytes())
        .map_err(|e| Error::io("<plot output>", e))
}

pub fn synth_data(spec: &SynthSpec, path: &Path, format: DatasetFormat) -> Result<DisagreementDataset> {
    let data = synthesize_dataset(spec)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_dataset(&data, path, format)?;
    Ok(data)
}
