//! Files written by the command line front end.
//!
//! A prediction run writes into its directory:
//!
//! * `config.json`: the resolved configuration, output directory blanked
//! * `trace.csv`, `trace.jsonl`: the simulated frames of the first seed
//! * `records/<mode>/seed_<seed>.csv`: raw per-frame prediction records
//! * `summary.json`: one [`MetricSummary`] per mode
//! * `runtime.json`: wall-clock metadata, the only non-reproducible file
//!
//! A sweep writes one such directory per point, `point_<k>_<label>/`, plus
//! `sweep.json` listing the points. `report_<figure>.csv` is rebuilt from
//! the raw records alone.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use aloha_core::export::{read_records_csv, write_records_csv, write_trace_csv, write_trace_jsonl};
use aloha_core::PredictorMode;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{PointResult, SeedRun};
use crate::metrics::{aggregate_trials, MetricSummary, TrialRecords};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(io_err(path))?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub config_hash: String,
    pub label: String,
    pub x: f64,
    pub summaries: Vec<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepIndex {
    pub axis: String,
    pub points: Vec<SweepEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub label: String,
    pub x: f64,
    pub dir: String,
}

fn records_path(dir: &Path, mode: PredictorMode, seed: u64) -> PathBuf {
    dir.join("records").join(mode.name()).join(format!("seed_{seed}.csv"))
}

pub fn write_trace(dir: &Path, trace: &[aloha_core::FrameTrace]) -> Result<()> {
    let csv_path = dir.join("trace.csv");
    write_trace_csv(create(&csv_path)?, trace)?;
    let jsonl_path = dir.join("trace.jsonl");
    write_trace_jsonl(create(&jsonl_path)?, trace)?;
    Ok(())
}

/// `config.json` with the output directory blanked, so that identical runs
/// into different directories produce identical files.
pub fn write_config(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let stored = ExperimentConfig { output_dir: PathBuf::from("."), ..cfg.clone() };
    write_json(&dir.join("config.json"), &stored)
}

/// Everything for one point except `runtime.json`.
pub fn write_point(dir: &Path, result: &PointResult) -> Result<()> {
    let cfg = &result.point.config;
    write_config(dir, cfg)?;
    if let Some(first) = result.runs.first() {
        write_trace(dir, &first.trace)?;
    }
    write_runs(dir, &result.runs)?;
    let summary = PointSummary {
        config_hash: cfg.hash(),
        label: result.point.label.clone(),
        x: result.point.x,
        summaries: result.summaries.clone(),
    };
    write_json(&dir.join("summary.json"), &summary)
}

fn write_runs(dir: &Path, runs: &[SeedRun]) -> Result<()> {
    for run in runs {
        for t in &run.trials {
            write_records_csv(create(&records_path(dir, t.mode, t.seed))?, &t.records)?;
        }
    }
    Ok(())
}

/// Rebuild the summaries of a point directory from its raw records.
pub fn reaggregate_point(dir: &Path) -> Result<PointSummary> {
    let cfg: ExperimentConfig = read_json(&dir.join("config.json"))?;
    let hash = cfg.hash();
    let summaries = cfg
        .run
        .modes
        .iter()
        .map(|&mode| {
            let trials = cfg
                .seeds
                .iter()
                .map(|&seed| {
                    let records = read_records_csv(open(&records_path(dir, mode, seed))?)?;
                    Ok(TrialRecords { config_hash: hash.clone(), seed, mode, records })
                })
                .collect::<Result<Vec<_>>>()?;
            aggregate_trials(&trials, cfg.run.eval_frames, cfg.run.moving_average)
        })
        .collect::<Result<Vec<_>>>()?;
    let stored: Option<PointSummary> = read_json(&dir.join("summary.json")).ok();
    let (label, x) = stored.map(|s| (s.label, s.x)).unwrap_or_else(|| ("base".into(), 0.0));
    Ok(PointSummary { config_hash: hash, label, x, summaries })
}

/// Plot data: `series,x,mean,stderr`. For a sweep, one row per mode and
/// point (tail-window mean across seeds); for a single run, one row per mode
/// and frame (moving average of the per-frame mean).
pub fn write_report(out_dir: &Path, figure: &str) -> Result<PathBuf> {
    let path = out_dir.join(format!("report_{figure}.csv"));
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["series", "x", "mean", "stderr"])?;
    let sweep_path = out_dir.join("sweep.json");
    if sweep_path.exists() {
        let index: SweepIndex = read_json(&sweep_path)?;
        let points = index
            .points
            .iter()
            .map(|p| reaggregate_point(&out_dir.join(&p.dir)))
            .collect::<Result<Vec<_>>>()?;
        let modes: Vec<PredictorMode> = points.first().map(|p| p.summaries.iter().map(|s| s.mode).collect()).unwrap_or_default();
        for mode in modes {
            for (entry, point) in index.points.iter().zip(&points) {
                if let Some(s) = point.summaries.iter().find(|s| s.mode == mode) {
                    w.write_record([mode.name().to_string(), entry.x.to_string(), s.eval_mean.to_string(), s.eval_stderr.to_string()])?;
                }
            }
        }
    } else {
        let point = reaggregate_point(out_dir)?;
        for s in &point.summaries {
            for (k, (m, e)) in s.moving_average.iter().zip(&s.per_frame_stderr).enumerate() {
                w.write_record([s.mode.name().to_string(), (k + 1).to_string(), m.to_string(), e.to_string()])?;
            }
        }
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}
