//! Pipeline commands behind the `thzris` binary.
//!
//! Every command reads its inputs from and writes its outputs to the run's
//! output directory:
//!
//! | command    | reads                                   | writes |
//! |------------|-----------------------------------------|--------|
//! | `label`    |                                         | `labels.csv` |
//! | `generate` | `labels.csv`                            | `dataset.txt` |
//! | `train`    | `dataset.txt`                           | `beam_best.ckpt`, `beam_final.ckpt`, `link_final.ckpt`, `run.json`, `report/epochs.*` |
//! | `eval`     | `labels.csv`, `dataset.txt`, checkpoints | `metrics.json`, `report/*` |
//! | `report`   | `run.json` and/or `metrics.json`        | `report/*` |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thzris_core::dataset::{split, Dataset};
use thzris_core::harness::{emit_report, evaluate, make_examples, Metrics, TrainRun, Trainer};
use thzris_core::seqmodel::{read_checkpoint, write_checkpoint, Task};
use thzris_core::{Config, Error, LabeledGrid, Link};

pub const LABELS_FILE: &str = "labels.csv";
pub const DATASET_FILE: &str = "dataset.txt";
pub const BEAM_BEST_FILE: &str = "beam_best.ckpt";
pub const BEAM_FINAL_FILE: &str = "beam_final.ckpt";
pub const LINK_FINAL_FILE: &str = "link_final.ckpt";
pub const RUN_FILE: &str = "run.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const REPORT_DIR: &str = "report";

#[derive(Debug)]
pub enum CliError {
    Config(Error),
    /// An upstream artifact is missing.
    Missing { path: PathBuf, produced_by: &'static str },
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Missing { .. } => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) | CliError::Runtime(e) => write!(f, "{e}"),
            CliError::Missing { path, produced_by } => {
                write!(f, "missing dependency {} (run `thzris {produced_by}` first)", path.display())
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => CliError::Config(e),
            other => CliError::Runtime(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn require(path: PathBuf, produced_by: &'static str) -> CliResult<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::Missing { path, produced_by })
    }
}

fn out_dir(cfg: &Config) -> CliResult<&Path> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Runtime(e.into()))?;
    Ok(&cfg.out_dir)
}

fn read_labels(cfg: &Config) -> CliResult<LabeledGrid> {
    let path = require(cfg.out_dir.join(LABELS_FILE), "label")?;
    Ok(LabeledGrid::read_csv(&path, &cfg.scene.grid)?)
}

fn read_dataset(cfg: &Config) -> CliResult<Dataset> {
    let path = require(cfg.out_dir.join(DATASET_FILE), "generate")?;
    let data = Dataset::read(&path)?;
    if data.n_bs_beams != cfg.codebook.bs_size || data.n_ris_beams != cfg.codebook.ris_size {
        return Err(CliError::Config(Error::Config(vec![format!(
            "codebook: {} was generated with |F|={} |P|={}",
            path.display(),
            data.n_bs_beams,
            data.n_ris_beams
        )])));
    }
    Ok(data)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let s = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, s + "\n").map_err(|e| CliError::Runtime(e.into()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let s = fs::read_to_string(path).map_err(|e| CliError::Runtime(e.into()))?;
    serde_json::from_str(&s).map_err(|e| {
        CliError::Runtime(Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    })
}

/// Exhaustive beam sweep over every grid point.
pub fn cmd_label(cfg: &Config) -> CliResult<String> {
    cfg.validate()?;
    let dir = out_dir(cfg)?;
    let grid = cfg.labeler()?.label_grid()?;
    let path = dir.join(LABELS_FILE);
    grid.write_csv(&path)?;
    Ok(format!(
        "labeled {} points: {} direct, {} ris, {} outage -> {}",
        grid.labels.len(),
        grid.count(Link::Direct),
        grid.count(Link::RisAssisted),
        grid.count(Link::Outage),
        path.display()
    ))
}

pub fn cmd_generate(cfg: &Config) -> CliResult<String> {
    cfg.validate()?;
    let labels = read_labels(cfg)?;
    let data = thzris_core::dataset::build_dataset(
        &labels,
        cfg.codebook.bs_size,
        cfg.codebook.ris_size,
        &cfg.generation(),
    )?;
    let path = out_dir(cfg)?.join(DATASET_FILE);
    data.write(&path)?;
    Ok(format!(
        "generated {} sequences ({:.1}% RIS-served steps) -> {}",
        data.len(),
        100.0 * data.ris_step_fraction(),
        path.display()
    ))
}

pub fn cmd_train(cfg: &Config, mut progress: impl FnMut(&str)) -> CliResult<String> {
    cfg.validate()?;
    let data = read_dataset(cfg)?;
    let (train, val) = split(&data.sequences, &cfg.split())?;
    let window = cfg.training.window;
    let train = make_examples(&train, data.n_bs_beams, window)?;
    let val = make_examples(&val, data.n_bs_beams, window)?;
    let trainer = Trainer {
        model: &cfg.model,
        training: &cfg.training,
        n_bs_beams: data.n_bs_beams,
        n_ris_beams: data.n_ris_beams,
        seed: cfg.training_seed(),
    };
    let epochs = cfg.training.epochs;
    let out = trainer.train(&train, &val, |r| {
        progress(&format!(
            "epoch {}/{epochs}: loss {:.4}, top-1 {:.4}, top-3 {:.4}, top-5 {:.4}, link {:.4}",
            r.epoch, r.train_loss, r.val_top1, r.val_top3, r.val_top5, r.link_acc
        ))
    })?;
    let dir = out_dir(cfg)?;
    let seed = cfg.training_seed();
    write_checkpoint(&dir.join(BEAM_BEST_FILE), &out.beam_best, seed)?;
    write_checkpoint(&dir.join(BEAM_FINAL_FILE), &out.beam_final, seed)?;
    write_checkpoint(&dir.join(LINK_FINAL_FILE), &out.link_final, seed)?;
    write_json(&dir.join(RUN_FILE), &out.run)?;
    emit_report(Some(&out.run), None, &dir.join(REPORT_DIR))?;
    let last = out.run.epochs.last().unwrap_or(&out.run.initial);
    Ok(format!(
        "trained {} epochs in {:.1}s: top-1 {:.4}, top-3 {:.4}, link {:.4} (best top-1 at epoch {})",
        out.run.epochs.len(),
        out.run.wall_seconds,
        last.val_top1,
        last.val_top3,
        last.link_acc,
        out.run.best_epoch
    ))
}

/// Evaluates a beam checkpoint (default `beam_best.ckpt`) together with the
/// final link checkpoint on the validation split.
pub fn cmd_eval(cfg: &Config, checkpoint: Option<&Path>) -> CliResult<String> {
    cfg.validate()?;
    let dir = cfg.out_dir.clone();
    let beam_path = match checkpoint {
        Some(p) => require(p.to_path_buf(), "train")?,
        None => require(dir.join(BEAM_BEST_FILE), "train")?,
    };
    let link_path = require(dir.join(LINK_FINAL_FILE), "train")?;
    let labels = read_labels(cfg)?;
    let data = read_dataset(cfg)?;
    let (beam, _) = read_checkpoint(&beam_path)?;
    let (link, _) = read_checkpoint(&link_path)?;
    if beam.task != Task::Beam || link.task != Task::Link {
        return Err(CliError::Runtime(Error::Checkpoint {
            path: beam_path,
            message: "expected a beam-task and a link-task checkpoint".into(),
        }));
    }
    let (_, val) = split(&data.sequences, &cfg.split())?;
    let val = make_examples(&val, data.n_bs_beams, beam.shape.window)?;
    let metrics = evaluate(&beam, &link, &val, &labels, cfg.report.boundary_band)?;
    write_json(&dir.join(METRICS_FILE), &metrics)?;
    let run_path = dir.join(RUN_FILE);
    let run: Option<TrainRun> = if run_path.exists() { Some(read_json(&run_path)?) } else { None };
    emit_report(run.as_ref(), Some(&metrics), &dir.join(REPORT_DIR))?;
    Ok(format!(
        "evaluated {} examples: top-1 {:.4}, top-3 {:.4}, top-5 {:.4}, link {:.4} (majority {:.4})",
        metrics.n_examples,
        metrics.top(1),
        metrics.top(3),
        metrics.top(5),
        metrics.link_accuracy,
        metrics.majority_link_fraction
    ))
}

/// Rewrites the report from `run.json` and `metrics.json`.
pub fn cmd_report(cfg: &Config) -> CliResult<String> {
    let dir = cfg.out_dir.clone();
    let run_path = dir.join(RUN_FILE);
    let metrics_path = dir.join(METRICS_FILE);
    if !run_path.exists() && !metrics_path.exists() {
        return Err(CliError::Missing {
            path: run_path,
            produced_by: "train",
        });
    }
    let run: Option<TrainRun> = if run_path.exists() { Some(read_json(&run_path)?) } else { None };
    let metrics: Option<Metrics> = if metrics_path.exists() { Some(read_json(&metrics_path)?) } else { None };
    let report = dir.join(REPORT_DIR);
    let files = emit_report(run.as_ref(), metrics.as_ref(), &report)?;
    Ok(format!("wrote {} report files to {}", files.len(), report.display()))
}
