use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use softlabel::commands::{self, TRAIN_LOG_FILE};
use softlabel::config::{Approach, Overrides, RunConfig, Tail};
use softlabel::dataset_io::DatasetFormat;
use softlabel::plot::Curve;
use softlabel::{Error, Result};
use softlabel_core::activations::{SigmoidParams, SsfParams, StepGrid};
use softlabel_core::data::{Split, SynthSpec};

#[derive(Parser)]
#[command(
    name = "softlabel",
    version,
    about = "Train and evaluate soft-label prediction heads"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a head and keep the checkpoint with the lowest validation loss.
    Train {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate a checkpoint: soft cross-entropy and hard micro-F1.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Checkpoint to load (default: <out>/checkpoint.json).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Also write per-instance predictions as JSON lines.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Print per-instance soft and hard predictions as JSON lines.
    Predict {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Sample an activation curve into a text file.
    PlotActivation(PlotArgs),
    /// Generate a synthetic disagreement dataset.
    SynthData(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    approach: Option<Approach>,
    /// Number of annotators.
    #[arg(long)]
    a: Option<u32>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_enum)]
    tail: Option<Tail>,
    /// Split to evaluate or predict on (train, dev, test).
    #[arg(long, value_parser = parse_split)]
    split: Option<Split>,
    #[arg(long)]
    epochs: Option<usize>,
}

fn parse_split(s: &str) -> std::result::Result<Split, String> {
    Split::parse(s).ok_or_else(|| format!("unknown split {s:?}"))
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            out: self.out.clone(),
            approach: self.approach,
            a: self.a,
            theta: self.theta,
            tail: self.tail,
            split: self.split,
            epochs: self.epochs,
        });
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Ssf,
    Sigmoid,
    Step,
    Relu,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, value_enum, default_value = "ssf")]
    variant: Variant,
    #[arg(long, default_value_t = 3)]
    a: u32,
    #[arg(long, default_value_t = 0.05)]
    theta: f64,
    #[arg(long, value_enum, default_value = "jump")]
    tail: Tail,
    #[arg(long, default_value_t = 5.0)]
    widening: f64,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    min: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    max: f64,
    #[arg(long, default_value_t = 512)]
    samples: usize,
    /// Add a derivative column.
    #[arg(long)]
    derivative: bool,
    /// Output file (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 400)]
    n_train: usize,
    #[arg(long, default_value_t = 100)]
    n_val: usize,
    #[arg(long, default_value_t = 100)]
    n_test: usize,
    #[arg(long, default_value_t = 3)]
    a: u32,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, value_enum)]
    format: Option<DatasetFormat>,
    #[arg(long)]
    output: PathBuf,
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { run } => {
            let cfg = run.load()?;
            let summary = commands::train_run(&cfg)?;
            println!(
                "best_epoch={} best_validation_loss={:.6} checkpoint={} log={}",
                summary.report.best_epoch,
                summary.report.best_validation_loss,
                summary.checkpoint_path.display(),
                cfg.out.join(TRAIN_LOG_FILE).display()
            );
        }
        Command::Evaluate { run, checkpoint, dump } => {
            let cfg = run.load()?;
            let report = commands::evaluate_run(&cfg, checkpoint.as_deref(), dump.as_deref())?;
            println!("split={} {}", cfg.data.split, report.summary_line());
        }
        Command::Predict { run, checkpoint } => {
            let cfg = run.load()?;
            let (_, predictions) = commands::predict_split(&cfg, checkpoint.as_deref())?;
            let mut out = io::stdout().lock();
            for p in &predictions {
                let line = serde_json::to_string(p).expect("prediction serializes");
                writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))?;
            }
        }
        Command::PlotActivation(p) => {
            let curve = match p.variant {
                Variant::Ssf => Curve::Ssf(SsfParams::with_tail(p.a, p.theta, p.tail.into())?),
                Variant::Sigmoid => Curve::Sigmoid(SigmoidParams::new(p.widening)?),
                Variant::Step => Curve::Step(StepGrid::new(p.a)?),
                Variant::Relu => Curve::Relu,
            };
            let mut out = open_output(p.output.as_ref())?;
            commands::plot_activation(&curve, p.min, p.max, p.samples, p.derivative, &mut out)?;
            out.flush().map_err(|e| Error::io("<plot output>", e))?;
        }
        Command::SynthData(s) => {
            let spec = SynthSpec {
                n_train: s.n_train,
                n_val: s.n_val,
                n_test: s.n_test,
                a: s.a,
                seed: s.seed,
                noise: s.noise,
            };
            let format = s.format.unwrap_or_else(|| DatasetFormat::from_path(&s.output));
            let data = commands::synth_data(&spec, &s.output, format)?;
            println!("wrote {} instances to {}", data.len(), s.output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
