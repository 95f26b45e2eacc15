//! Windowed next-frame backlog prediction.
//!
//! An [`OnlineLearner`] owns an LSTM, its RMSProp state and a replay buffer of
//! labelled windows. Each frame it takes one minibatch step on the buffer and
//! predicts the next backlog from the most recent `T_o` observations. Labels
//! reach the learner one frame late: the window ending at frame `t` is paired
//! with the label computed from frame `t + 1`.
//!
//! Classical predictors simply reuse the current-frame estimate as the
//! prediction for the next frame.

use std::collections::VecDeque;
use std::sync::Arc;

use aloha_neural::{
    forward_batch, forward_window, Architecture, DropoutSampler, HyperParams, LstmModel, OptimizerState,
    RmsPropConfig, INPUT_WIDTH,
};
use ndarray::{s, Array2, Array3};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::estimators::{argmax_first, mom_idle_estimate, BacklogDistribution, MlEstimator, MomentTable, OccupancyTable};
use crate::sim::{run_episode, stream_rng, FrameObservation, FrameTrace, SimConfig, SimRng};
use crate::traffic::TrafficConfig;

/// Stream of the learner RNG (minibatch sampling and dropout).
const LEARNER_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelStrategy {
    MomMae,
    MomIdle,
    Ml,
    Genie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorMode {
    Mom,
    Ml,
    OfflineLstm,
    OnlineLstm,
    GenieLstm,
}

impl PredictorMode {
    pub const ALL: [PredictorMode; 5] =
        [Self::Mom, Self::Ml, Self::OfflineLstm, Self::OnlineLstm, Self::GenieLstm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mom => "mom",
            Self::Ml => "ml",
            Self::OfflineLstm => "offline_lstm",
            Self::OnlineLstm => "online_lstm",
            Self::GenieLstm => "genie_lstm",
        }
    }

    pub fn is_lstm(self) -> bool {
        matches!(self, Self::OfflineLstm | Self::OnlineLstm | Self::GenieLstm)
    }
}

impl std::str::FromStr for PredictorMode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CoreError::Config(format!("unknown predictor mode `{s}`")))
    }
}

/// Moment estimator used by the classical `mom` predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomVariant {
    Mae,
    Idle,
}

/// Settings shared by every predictor mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub n_max: u32,
    pub layer_sizes: Vec<usize>,
    pub label_strategy: LabelStrategy,
    pub mom_variant: MomVariant,
    /// Whether the ML estimator models detection errors.
    pub ml_detection_aware: bool,
    /// Train on windows that also contain the label frame's observation.
    pub literal_window: bool,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            n_max: 162,
            layer_sizes: vec![64, 64],
            label_strategy: LabelStrategy::MomMae,
            mom_variant: MomVariant::Idle,
            ml_detection_aware: true,
            literal_window: false,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.is_empty() || self.layer_sizes.contains(&0) {
            return Err(CoreError::Config("layer_sizes must be non-empty with positive widths".into()));
        }
        if !(0.0..1.0).contains(&self.rmsprop_decay) {
            return Err(CoreError::Config("rmsprop_decay must lie in [0, 1)".into()));
        }
        if !(self.rmsprop_epsilon >= 0.0) {
            return Err(CoreError::Config("rmsprop_epsilon must be >= 0".into()));
        }
        Ok(())
    }

    pub fn architecture(&self) -> Result<Architecture> {
        Ok(Architecture::new(INPUT_WIDTH, self.layer_sizes.clone(), self.n_max as usize + 1)?)
    }

    pub fn rmsprop(&self, hyper: &HyperParams) -> RmsPropConfig {
        RmsPropConfig { learning_rate: hyper.learning_rate, decay: self.rmsprop_decay, epsilon: self.rmsprop_epsilon }
    }
}

/// `T_o` normalized observations ending at some frame, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    pub rows: Array2<f64>,
}

impl ObservationWindow {
    /// Window ending at `observations[end]`. Positions before the first frame
    /// are filled with an all-idle frame.
    pub fn ending_at(observations: &[FrameObservation], end: usize, window: usize, rao_count: u32) -> Self {
        let mut rows = Array2::zeros((window, INPUT_WIDTH));
        for k in 0..window {
            let pos = end as isize - (window - 1 - k) as isize;
            let v = if pos >= 0 {
                observations[pos as usize].normalized(rao_count)
            } else {
                [1.0, 0.0, 0.0]
            };
            rows.row_mut(k).assign(&ndarray::arr1(&v));
        }
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub window: ObservationWindow,
    pub label: u32,
    /// Frame the label refers to.
    pub frame_index: u64,
}

/// The most recent `capacity` samples, oldest evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    samples: VecDeque<LabeledSample>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(CoreError::Config("buffer capacity must be >= 1".into()));
        }
        Ok(Self { capacity, samples: VecDeque::with_capacity(capacity) })
    }

    pub fn push(&mut self, sample: LabeledSample) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, k: usize) -> Option<&LabeledSample> {
        self.samples.get(k)
    }

    /// `min(size, len)` distinct indices drawn uniformly.
    pub fn sample_indices<R: rand::Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Vec<usize> {
        index::sample(rng, self.samples.len(), size.min(self.samples.len())).into_vec()
    }
}

/// Point estimate (smallest argmax) and distribution in inference mode.
pub fn predict(model: &LstmModel, window: &ObservationWindow) -> Result<(u32, BacklogDistribution)> {
    let probs = forward_window(model, window.rows.view(), None)?;
    let point = argmax_first(&probs);
    Ok((point, BacklogDistribution { probs }))
}

/// Training label for the frame described by `trace`, clamped to `n_max`.
#[derive(Debug, Clone)]
pub struct Labeler {
    strategy: LabelStrategy,
    rao_count: u32,
    n_max: u32,
    moments: MomentTable,
    ml: Option<MlEstimator>,
}

impl Labeler {
    pub fn new(strategy: LabelStrategy, sim: &SimConfig, config: &PredictorConfig, table: &Arc<OccupancyTable>) -> Result<Self> {
        let ml = match strategy {
            LabelStrategy::Ml => Some(ml_estimator(sim, config, table)?),
            _ => None,
        };
        Ok(Self {
            strategy,
            rao_count: sim.rao_count,
            n_max: config.n_max,
            moments: MomentTable::new(sim.rao_count, config.n_max)?,
            ml,
        })
    }

    pub fn label(&mut self, trace: &FrameTrace) -> Result<u32> {
        let obs = &trace.observation;
        let label = match self.strategy {
            LabelStrategy::Genie => trace.true_backlog,
            LabelStrategy::MomMae => self.moments.estimate(obs)?,
            LabelStrategy::MomIdle => mom_idle_estimate(obs, self.rao_count, self.n_max)?,
            LabelStrategy::Ml => self.ml.as_mut().expect("constructed for ml").estimate(obs)?.backlog,
        };
        Ok(label.min(self.n_max))
    }
}

/// Convenience wrapper over [`Labeler`] for a single frame.
pub fn make_label(
    strategy: LabelStrategy,
    trace: &FrameTrace,
    sim: &SimConfig,
    config: &PredictorConfig,
) -> Result<u32> {
    let table = Arc::new(OccupancyTable::new(sim.rao_count, if strategy == LabelStrategy::Ml { config.n_max } else { 0 })?);
    Labeler::new(strategy, sim, config, &table)?.label(trace)
}

fn ml_estimator(sim: &SimConfig, config: &PredictorConfig, table: &Arc<OccupancyTable>) -> Result<MlEstimator> {
    if table.rao_count() != sim.rao_count || table.n_max() != config.n_max {
        return Err(CoreError::Config("occupancy table does not match the run's F and N_max".into()));
    }
    let p = if config.ml_detection_aware { sim.detection_error_prob } else { 0.0 };
    MlEstimator::new(Arc::clone(table), p)
}

/// LSTM with optimizer state, replay buffer and its own random stream.
#[derive(Debug, Clone)]
pub struct OnlineLearner {
    pub model: LstmModel,
    pub optimizer: OptimizerState,
    pub buffer: ReplayBuffer,
    hyper: HyperParams,
    dropout: DropoutSampler,
    rng: SimRng,
    skipped_steps: u64,
}

impl OnlineLearner {
    pub fn new(model: LstmModel, hyper: HyperParams, rmsprop: RmsPropConfig, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let optimizer = OptimizerState::for_model(rmsprop, &model)?;
        Ok(Self {
            model,
            optimizer,
            buffer: ReplayBuffer::new(hyper.buffer_size)?,
            dropout: DropoutSampler::new(hyper.dropout_rate),
            hyper,
            rng: stream_rng(seed, LEARNER_STREAM),
            skipped_steps: 0,
        })
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    /// Steps skipped because the loss or gradient was not finite.
    pub fn skipped_steps(&self) -> u64 {
        self.skipped_steps
    }

    /// Append `sample` and take one RMSProp step on a uniformly drawn
    /// minibatch. Returns the minibatch loss, or `None` when the step was
    /// skipped.
    pub fn online_step(&mut self, sample: LabeledSample) -> Result<Option<f64>> {
        if sample.window.len() != self.hyper.window {
            return Err(CoreError::Config(format!(
                "sample window has {} frames, learner expects {}",
                sample.window.len(),
                self.hyper.window
            )));
        }
        if sample.label as usize >= self.model.classes() {
            return Err(CoreError::Invariant(format!("label {} out of range", sample.label)));
        }
        self.buffer.push(sample);
        let picks = self.buffer.sample_indices(self.hyper.minibatch, &mut self.rng);
        let steps = self.hyper.window;
        let mut inputs = Array3::zeros((picks.len(), steps, INPUT_WIDTH));
        let mut labels = Vec::with_capacity(picks.len());
        for (b, &k) in picks.iter().enumerate() {
            let s = self.buffer.get(k).expect("index drawn from buffer");
            inputs.slice_mut(s![b, .., ..]).assign(&s.window.rows);
            labels.push(s.label as usize);
        }
        let layer_sizes = &self.model.architecture().layer_sizes;
        let mask = self.dropout.sample(layer_sizes, steps, picks.len(), &mut self.rng);
        let out = forward_batch(&self.model, inputs.view(), mask.as_ref())?;
        let loss = out.mean_loss(&labels);
        if !loss.is_finite() {
            log::warn!("skipping step with non-finite loss {loss}");
            self.skipped_steps += 1;
            return Ok(None);
        }
        let grads = aloha_neural::backward_batch(&self.model, &out, &labels, mask.as_ref())?;
        match self.optimizer.step(&mut self.model, &grads) {
            Ok(()) => Ok(Some(loss)),
            Err(aloha_neural::NeuralError::NonFiniteGradient { index }) => {
                log::warn!("skipping step with non-finite gradient at parameter {index}");
                self.skipped_steps += 1;
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn predict(&self, window: &ObservationWindow) -> Result<(u32, BacklogDistribution)> {
        predict(&self.model, window)
    }
}

/// Offline training on a trace with true labels: one step per frame for the
/// first `budget_frames` frames. A zero budget leaves the model untouched.
/// Returns the per-step minibatch losses.
pub fn pretrain_offline(learner: &mut OnlineLearner, trace: &[FrameTrace], rao_count: u32, budget_frames: usize) -> Result<Vec<f64>> {
    let observations: Vec<FrameObservation> = trace.iter().map(|t| t.observation).collect();
    let n_max = learner.model.classes() as u32 - 1;
    let window = learner.hyper.window;
    let mut losses = Vec::new();
    for t in 1..trace.len().min(budget_frames.saturating_add(1)) {
        let sample = LabeledSample {
            window: ObservationWindow::ending_at(&observations, t - 1, window, rao_count),
            label: trace[t].true_backlog.min(n_max),
            frame_index: trace[t].frame_index,
        };
        if let Some(l) = learner.online_step(sample)? {
            losses.push(l);
        }
    }
    Ok(losses)
}

/// One frame of a prediction run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    /// Frame whose backlog is predicted.
    pub frame_index: u64,
    pub true_backlog: u32,
    pub predicted: u32,
    pub abs_error: u32,
}

/// Everything a prediction run needs besides the trace.
#[derive(Debug, Clone)]
pub struct PredictionSetup<'a> {
    pub sim: SimConfig,
    pub config: &'a PredictorConfig,
    pub hyper: HyperParams,
    /// Initial LSTM weights (pretrained checkpoint); required for LSTM modes.
    pub initial_model: Option<&'a LstmModel>,
    pub occupancy: Arc<OccupancyTable>,
    pub learner_seed: u64,
}

impl PredictionSetup<'_> {
    fn check(&self, mode: PredictorMode) -> Result<()> {
        self.config.validate()?;
        self.hyper.validate()?;
        if mode.is_lstm() {
            let model = self
                .initial_model
                .ok_or_else(|| CoreError::Config(format!("mode {} needs a model checkpoint", mode.name())))?;
            if model.classes() != self.config.n_max as usize + 1 {
                return Err(CoreError::Config(format!(
                    "checkpoint has {} classes, run uses N_max = {}",
                    model.classes(),
                    self.config.n_max
                )));
            }
        }
        Ok(())
    }
}

/// Predict `N^{t+1}` for `t = 0..trace.len()-1` using the given mode.
///
/// The trace must contain one more frame than the number of predictions.
pub fn predict_on_trace(trace: &[FrameTrace], mode: PredictorMode, setup: &PredictionSetup<'_>) -> Result<Vec<PredictionRecord>> {
    setup.check(mode)?;
    if trace.len() < 2 {
        return Err(CoreError::Config("need at least two frames to predict".into()));
    }
    let f = setup.sim.rao_count;
    let n_max = setup.config.n_max;
    let observations: Vec<FrameObservation> = trace.iter().map(|t| t.observation).collect();
    let record = |t: usize, predicted: u32| {
        let truth = trace[t + 1].true_backlog;
        PredictionRecord {
            frame_index: trace[t + 1].frame_index,
            true_backlog: truth,
            predicted,
            abs_error: truth.abs_diff(predicted),
        }
    };
    let frames = trace.len() - 1;
    let mut out = Vec::with_capacity(frames);
    match mode {
        PredictorMode::Mom => {
            let table = MomentTable::new(f, n_max)?;
            for (t, obs) in observations.iter().take(frames).enumerate() {
                let est = match setup.config.mom_variant {
                    MomVariant::Mae => table.estimate(obs)?,
                    MomVariant::Idle => mom_idle_estimate(obs, f, n_max)?,
                };
                out.push(record(t, est));
            }
        }
        PredictorMode::Ml => {
            let mut ml = ml_estimator(&setup.sim, setup.config, &setup.occupancy)?;
            for (t, obs) in observations.iter().take(frames).enumerate() {
                out.push(record(t, ml.estimate(obs)?.backlog));
            }
        }
        PredictorMode::OfflineLstm => {
            let model = setup.initial_model.expect("checked");
            for t in 0..frames {
                let w = ObservationWindow::ending_at(&observations, t, setup.hyper.window, f);
                out.push(record(t, predict(model, &w)?.0));
            }
        }
        PredictorMode::OnlineLstm | PredictorMode::GenieLstm => {
            let strategy = if mode == PredictorMode::GenieLstm { LabelStrategy::Genie } else { setup.config.label_strategy };
            let mut labeler = Labeler::new(strategy, &setup.sim, setup.config, &setup.occupancy)?;
            let mut learner = OnlineLearner::new(
                setup.initial_model.expect("checked").clone(),
                setup.hyper,
                setup.config.rmsprop(&setup.hyper),
                setup.learner_seed,
            )?;
            let window = setup.hyper.window;
            for t in 0..frames {
                if t >= 1 {
                    // label of frame t is known once frame t has completed
                    let end = if setup.config.literal_window { t } else { t - 1 };
                    let sample = LabeledSample {
                        window: ObservationWindow::ending_at(&observations, end, window, f),
                        label: labeler.label(&trace[t])?,
                        frame_index: trace[t].frame_index,
                    };
                    learner.online_step(sample)?;
                }
                let w = ObservationWindow::ending_at(&observations, t, window, f);
                out.push(record(t, learner.predict(&w)?.0));
            }
            if learner.skipped_steps() > 0 {
                log::warn!("{} optimizer steps skipped", learner.skipped_steps());
            }
        }
    }
    Ok(out)
}

/// Simulate `num_frames + 1` frames and predict the last `num_frames`.
pub fn run_prediction_episode(
    traffic: &TrafficConfig,
    mode: PredictorMode,
    num_frames: usize,
    setup: &PredictionSetup<'_>,
) -> Result<Vec<PredictionRecord>> {
    setup.check(mode)?;
    let trace = run_episode(&setup.sim, traffic, num_frames + 1)?;
    predict_on_trace(&trace, mode, setup)
}

/// Mean absolute error over a slice of records.
pub fn mean_abs_error(records: &[PredictionRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().map(|r| f64::from(r.abs_error)).sum::<f64>() / records.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn trace_with(obs: FrameObservation, backlog: u32, frames: usize) -> Vec<FrameTrace> {
        (0..frames)
            .map(|t| FrameTrace {
                frame_index: t as u64,
                true_backlog: backlog,
                observation: obs,
                carryover_count: 0,
                dropped_count: 0,
                arrivals: backlog,
            })
            .collect()
    }

    #[test]
    fn window_is_left_padded_with_idle_frames() {
        let obs = vec![FrameObservation::new(2, 1, 1); 3];
        let w = ObservationWindow::ending_at(&obs, 1, 4, 4);
        assert_eq!(w.len(), 4);
        assert_eq!(w.rows.row(0).to_vec(), vec![1.0, 0.0, 0.0]);
        assert_eq!(w.rows.row(1).to_vec(), vec![1.0, 0.0, 0.0]);
        assert_eq!(w.rows.row(3).to_vec(), vec![0.5, 0.25, 0.25]);
    }

    #[test]
    fn buffer_evicts_oldest() {
        let mut b = ReplayBuffer::new(3).unwrap();
        let w = ObservationWindow { rows: Array2::zeros((2, 3)) };
        for k in 0..5 {
            b.push(LabeledSample { window: w.clone(), label: k, frame_index: u64::from(k) });
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.get(0).unwrap().label, 2);
        let mut rng = SimRng::seed_from_u64(0);
        let mut picks = b.sample_indices(10, &mut rng);
        picks.sort_unstable();
        assert_eq!(picks, vec![0, 1, 2]);
    }

    #[test]
    fn zero_head_predicts_uniform() {
        let cfg = PredictorConfig { n_max: 9, layer_sizes: vec![4], ..PredictorConfig::default() };
        let mut model = LstmModel::init(cfg.architecture().unwrap(), &mut SimRng::seed_from_u64(1));
        model.zero_head();
        let w = ObservationWindow::ending_at(&[FrameObservation::new(3, 1, 0)], 0, 5, 4);
        let (point, dist) = predict(&model, &w).unwrap();
        assert_eq!(point, 0);
        assert!((dist.total() - 1.0).abs() < 1e-12);
        assert!(dist.probs.iter().all(|p| (p - 0.1).abs() < 1e-15));
    }

    #[test]
    fn labels_follow_strategy() {
        let sim = SimConfig::default();
        let cfg = PredictorConfig::default();
        let idle = trace_with(FrameObservation::empty(54), 7, 1)[0];
        assert_eq!(make_label(LabelStrategy::Genie, &idle, &sim, &cfg).unwrap(), 7);
        assert_eq!(make_label(LabelStrategy::MomIdle, &idle, &sim, &cfg).unwrap(), 0);
        assert_eq!(make_label(LabelStrategy::MomMae, &idle, &sim, &cfg).unwrap(), 0);
        assert_eq!(make_label(LabelStrategy::Ml, &idle, &sim, &cfg).unwrap(), 0);
        let huge = FrameTrace { true_backlog: 1000, ..idle };
        assert_eq!(make_label(LabelStrategy::Genie, &huge, &sim, &cfg).unwrap(), 162);
    }

    #[test]
    fn first_step_uses_single_sample() {
        let hyper = HyperParams { window: 3, ..HyperParams::default() };
        let cfg = PredictorConfig { n_max: 5, layer_sizes: vec![4], ..PredictorConfig::default() };
        let model = LstmModel::init(cfg.architecture().unwrap(), &mut SimRng::seed_from_u64(2));
        let mut learner = OnlineLearner::new(model.clone(), hyper, cfg.rmsprop(&hyper), 0).unwrap();
        let w = ObservationWindow { rows: Array2::zeros((3, 3)) };
        let loss = learner.online_step(LabeledSample { window: w, label: 2, frame_index: 1 }).unwrap();
        assert!(loss.is_some());
        assert_eq!(learner.buffer.len(), 1);
        assert_eq!(learner.optimizer.steps, 1);
        assert_ne!(learner.model.params(), model.params());
    }

    #[test]
    fn lstm_mode_needs_matching_checkpoint() {
        let cfg = PredictorConfig { n_max: 5, layer_sizes: vec![4], ..PredictorConfig::default() };
        let other = PredictorConfig { n_max: 6, ..cfg.clone() };
        let model = LstmModel::init(other.architecture().unwrap(), &mut SimRng::seed_from_u64(3));
        let sim = SimConfig { rao_count: 4, ..SimConfig::default() };
        let setup = PredictionSetup {
            sim,
            config: &cfg,
            hyper: HyperParams::default(),
            initial_model: Some(&model),
            occupancy: Arc::new(OccupancyTable::new(4, 5).unwrap()),
            learner_seed: 0,
        };
        let trace = trace_with(FrameObservation::empty(4), 0, 3);
        assert!(predict_on_trace(&trace, PredictorMode::OnlineLstm, &setup).is_err());
        assert!(predict_on_trace(&trace, PredictorMode::Mom, &setup).is_ok());
        let none = PredictionSetup { initial_model: None, ..setup };
        assert!(predict_on_trace(&trace, PredictorMode::OfflineLstm, &none).is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in PredictorMode::ALL {
            assert_eq!(m.name().parse::<PredictorMode>().unwrap(), m);
        }
        assert!("lstm".parse::<PredictorMode>().is_err());
    }
}
