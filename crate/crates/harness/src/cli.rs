//! Command line front end.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use aloha_core::{run_episode, PredictorMode};
use aloha_neural::{read_checkpoint, write_checkpoint, Checkpoint, LstmModel};
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{load_config, parse_config, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiment::{pretrain, run_sweep, PointResult};
use crate::output::{create, write_config, write_json, write_point, write_report, write_trace, SweepEntry, SweepIndex};

#[derive(Debug, Parser)]
#[command(name = "aloha", version, about = "Backlog prediction experiments for framed ALOHA random access")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML experiment file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Frames to simulate, predict, or pretrain on.
    #[arg(long, global = true)]
    pub frames: Option<usize>,

    /// Predictor modes, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub mode: Vec<PredictorMode>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Override any configuration key, e.g. `--set traffic.period_frames=20`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one episode and export its frames.
    Simulate,
    /// Train the offline model and write a checkpoint.
    Pretrain,
    /// Run every configured mode on every seed.
    Predict,
    /// Run the configured sweep.
    Sweep,
    /// Rebuild plot data from raw records.
    Report {
        #[arg(long, default_value = "fig")]
        figure: String,
    },
}

#[derive(Debug, Serialize)]
struct Runtime {
    command: &'static str,
    elapsed_seconds: f64,
    threads: usize,
    unix_time: u64,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path, &cli.overrides)?,
        None => parse_config("", &cli.overrides)?,
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
        cfg.pretrain.seed = seed;
    }
    if let Some(frames) = cli.frames {
        match cli.command {
            Command::Pretrain => cfg.pretrain.frames = frames,
            _ => {
                cfg.run.frames = frames;
                cfg.run.eval_frames = cfg.run.eval_frames.min(frames);
                cfg.run.moving_average = cfg.run.moving_average.min(frames);
            }
        }
    }
    if !cli.mode.is_empty() {
        cfg.run.modes = cli.mode.clone();
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate(None)?;
    Ok(cfg)
}

fn write_runtime(dir: &Path, command: &'static str, started: Instant) -> Result<()> {
    let runtime = Runtime {
        command,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        unix_time: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    write_json(&dir.join("runtime.json"), &runtime)
}

/// Load the checkpoint when any LSTM mode is requested.
pub fn load_model(cfg: &ExperimentConfig) -> Result<Option<LstmModel>> {
    let Some(mode) = cfg.run.modes.iter().find(|m| m.is_lstm()) else {
        return Ok(None);
    };
    let path = cfg.checkpoint_path();
    let file = File::open(&path)
        .map_err(|_| HarnessError::MissingCheckpoint { mode: mode.name().to_string(), path: path.clone() })?;
    let ckpt = read_checkpoint(BufReader::new(file))?;
    let expected = cfg.predictor.architecture()?;
    if ckpt.model.architecture() != &expected {
        return Err(HarnessError::CheckpointMismatch {
            path,
            reason: format!("architecture {:?}, configuration expects {:?}", ckpt.model.architecture(), expected),
        });
    }
    Ok(Some(ckpt.model))
}

fn save_model(cfg: &ExperimentConfig, model: &LstmModel) -> Result<PathBuf> {
    let path = cfg.checkpoint_path();
    let mut w = create(&path)?;
    write_checkpoint(&mut w, &Checkpoint { model: model.clone(), hyper: cfg.hyper.to_params() })?;
    w.flush().map_err(|source| HarnessError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn write_points(dir: &Path, cfg: &ExperimentConfig, results: &[PointResult]) -> Result<()> {
    let Some(sweep) = &cfg.sweep else {
        return write_point(dir, &results[0]);
    };
    let mut entries = Vec::with_capacity(results.len());
    for (k, r) in results.iter().enumerate() {
        let name = format!("point_{k}_{}", r.point.label);
        write_point(&dir.join(&name), r)?;
        entries.push(SweepEntry { label: r.point.label.clone(), x: r.point.x, dir: name });
    }
    write_json(&dir.join("sweep.json"), &SweepIndex { axis: sweep.axis().to_string(), points: entries })
}

pub fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let cfg = resolve(cli)?;
    let dir = cfg.output_dir.clone();
    match &cli.command {
        Command::Simulate => {
            let seed = cfg.seeds.first().copied().unwrap_or(0);
            let trace = run_episode(&cfg.sim_config(seed), &cfg.traffic_config(seed), cfg.run.frames + 1)?;
            write_config(&dir, &cfg)?;
            write_trace(&dir, &trace)?;
            write_runtime(&dir, "simulate", started)?;
            log::info!("wrote {} frames to {}", trace.len(), dir.display());
        }
        Command::Pretrain => {
            let (model, losses) = pretrain(&cfg)?;
            let path = save_model(&cfg, &model)?;
            write_runtime(&dir, "pretrain", started)?;
            let tail = &losses[losses.len().saturating_sub(1000)..];
            log::info!(
                "{} steps, mean loss over last {} = {:.4}, checkpoint {}",
                losses.len(),
                tail.len(),
                tail.iter().sum::<f64>() / tail.len().max(1) as f64,
                path.display()
            );
        }
        Command::Predict | Command::Sweep => {
            let mut cfg = cfg;
            if matches!(cli.command, Command::Predict) {
                cfg.sweep = None;
            }
            let model = load_model(&cfg)?;
            let results = run_sweep(&cfg, model.as_ref())?;
            write_points(&dir, &cfg, &results)?;
            write_runtime(&dir, if cfg.sweep.is_some() { "sweep" } else { "predict" }, started)?;
            for r in &results {
                for s in &r.summaries {
                    log::info!("{} {}: {:.3} +/- {:.3}", r.point.label, s.mode.name(), s.eval_mean, s.eval_stderr);
                }
            }
        }
        Command::Report { figure } => {
            let path = write_report(&dir, figure)?;
            log::info!("wrote {}", path.display());
        }
    }
    Ok(())
}
