//! Running episodes: offline pretraining, all modes over all seeds, sweeps.

use std::sync::Arc;

use aloha_core::{
    predict_on_trace, pretrain_offline, run_episode, FrameTrace, LabelStrategy, OccupancyTable, OnlineLearner,
    PredictionSetup, PredictorMode,
};
use aloha_neural::{HyperParams, LstmModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, SweepPoint};
use crate::error::Result;
use crate::metrics::{aggregate_trials, MetricSummary, TrialRecords};

/// Offline phase: fresh weights trained on true labels from a trace of
/// `pretrain.frames + 1` frames (periodic devices removed when
/// `bernoulli_only`). Returns the model and per-step losses.
pub fn pretrain(cfg: &ExperimentConfig) -> Result<(LstmModel, Vec<f64>)> {
    let seed = cfg.pretrain.seed;
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    let model = LstmModel::init(cfg.predictor.architecture()?, &mut init_rng);
    if cfg.pretrain.frames == 0 {
        return Ok((model, Vec::new()));
    }
    let hyper = HyperParams { learning_rate: cfg.pretrain.learning_rate, ..cfg.hyper.to_params() };
    let mut learner = OnlineLearner::new(model, hyper, cfg.predictor.rmsprop(&hyper), seed)?;
    let mut traffic = cfg.traffic_config(seed);
    if cfg.pretrain.bernoulli_only {
        traffic = traffic.bernoulli_only();
    }
    let trace = run_episode(&cfg.sim_config(seed), &traffic, cfg.pretrain.frames + 1)?;
    let losses = pretrain_offline(&mut learner, &trace, cfg.sim.rao_count, cfg.pretrain.frames)?;
    Ok((learner.model, losses))
}

/// Occupancy table sized for the run, or a trivial one when no mode needs
/// the ML estimator.
fn occupancy_for(cfg: &ExperimentConfig) -> Result<Arc<OccupancyTable>> {
    let needs_ml = cfg.run.modes.contains(&PredictorMode::Ml)
        || (cfg.predictor.label_strategy == LabelStrategy::Ml && cfg.run.modes.contains(&PredictorMode::OnlineLstm));
    let n = if needs_ml { cfg.predictor.n_max } else { 0 };
    Ok(Arc::new(OccupancyTable::new(cfg.sim.rao_count, n)?))
}

/// Trials of one seed: one simulated trace shared by every mode.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: Vec<FrameTrace>,
    pub trials: Vec<TrialRecords>,
}

/// Simulate each seed once and evaluate every configured mode on it. Seeds
/// run in parallel; results come back in seed-list order.
pub fn run_point(cfg: &ExperimentConfig, model: Option<&LstmModel>) -> Result<Vec<SeedRun>> {
    cfg.validate(None)?;
    let occupancy = occupancy_for(cfg)?;
    let hash = cfg.hash();
    cfg.seeds
        .par_iter()
        .map(|&seed| {
            let sim = cfg.sim_config(seed);
            let trace = run_episode(&sim, &cfg.traffic_config(seed), cfg.run.frames + 1)?;
            let setup = PredictionSetup {
                sim,
                config: &cfg.predictor,
                hyper: cfg.hyper.to_params(),
                initial_model: model,
                occupancy: Arc::clone(&occupancy),
                learner_seed: seed,
            };
            let trials = cfg
                .run
                .modes
                .iter()
                .map(|&mode| {
                    let records = predict_on_trace(&trace, mode, &setup)?;
                    Ok(TrialRecords { config_hash: hash.clone(), seed, mode, records })
                })
                .collect::<Result<Vec<_>>>()?;
            log::debug!("seed {seed} done");
            Ok(SeedRun { seed, trace, trials })
        })
        .collect()
}

/// Trials of `mode` across seeds.
pub fn trials_for(runs: &[SeedRun], mode: PredictorMode) -> Vec<TrialRecords> {
    runs.iter().flat_map(|r| r.trials.iter().filter(|t| t.mode == mode).cloned()).collect()
}

/// One summary per configured mode, in mode order.
pub fn summarize(cfg: &ExperimentConfig, runs: &[SeedRun]) -> Result<Vec<MetricSummary>> {
    cfg.run
        .modes
        .iter()
        .map(|&m| aggregate_trials(&trials_for(runs, m), cfg.run.eval_frames, cfg.run.moving_average))
        .collect()
}

/// Results of one sweep point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: SweepPoint,
    pub runs: Vec<SeedRun>,
    pub summaries: Vec<MetricSummary>,
}

/// Every sweep point (or the single base point) with a shared model.
pub fn run_sweep(cfg: &ExperimentConfig, model: Option<&LstmModel>) -> Result<Vec<PointResult>> {
    cfg.validate(None)?;
    cfg.sweep_points()
        .into_iter()
        .map(|point| {
            let runs = run_point(&point.config, model)?;
            let summaries = summarize(&point.config, &runs)?;
            Ok(PointResult { point, runs, summaries })
        })
        .collect()
}
