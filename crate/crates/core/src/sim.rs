//! Discrete-frame framed-ALOHA simulator.
//!
//! Each frame offers `F` random access opportunities (RAOs). Every active
//! device picks one uniformly at random; the base station sees each RAO as
//! idle, success or collision, except that a non-idle RAO is misread as idle
//! with probability `p_ed`. Devices on correctly detected singleton RAOs are
//! acknowledged; everyone else retransmits next frame until the attempt
//! budget `max_attempts` is spent, after which the packet is dropped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::traffic::{TrafficConfig, TrafficSource};

/// Random stream used for channel and traffic draws.
pub type SimRng = ChaCha8Rng;

const CHANNEL_STREAM: u64 = 0;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeviceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceState {
    pub id: DeviceId,
    /// Transmissions already spent on the current packet.
    pub attempts_used: u32,
    pub is_active: bool,
}

impl DeviceState {
    /// A device that has just generated a packet.
    pub fn fresh(id: DeviceId) -> Self {
        Self { id, attempts_used: 0, is_active: true }
    }
}

/// What the base station sees in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameObservation {
    pub idle_count: u32,
    pub success_count: u32,
    pub collision_count: u32,
}

impl FrameObservation {
    pub fn new(idle_count: u32, success_count: u32, collision_count: u32) -> Self {
        Self { idle_count, success_count, collision_count }
    }

    /// Every RAO idle.
    pub fn empty(rao_count: u32) -> Self {
        Self::new(rao_count, 0, 0)
    }

    pub fn total(&self) -> u32 {
        self.idle_count + self.success_count + self.collision_count
    }

    pub fn validate(&self, rao_count: u32) -> Result<()> {
        if self.total() != rao_count {
            return Err(CoreError::Invariant(format!(
                "observation {self:?} does not sum to F = {rao_count}"
            )));
        }
        Ok(())
    }

    /// `(idle, success, collision) / F`.
    pub fn normalized(&self, rao_count: u32) -> [f64; 3] {
        let f = f64::from(rao_count);
        [
            f64::from(self.idle_count) / f,
            f64::from(self.success_count) / f,
            f64::from(self.collision_count) / f,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// RAOs per frame (`F`).
    pub rao_count: u32,
    /// Probability that a non-idle RAO is observed as idle (`p_ed`).
    pub detection_error_prob: f64,
    /// Transmission budget per packet (`gamma_max`).
    pub max_attempts: u32,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { rao_count: 54, detection_error_prob: 0.05, max_attempts: 10, rng_seed: 0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rao_count < 1 {
            return Err(CoreError::Config("rao_count must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.detection_error_prob) {
            return Err(CoreError::Config(format!(
                "detection_error_prob must lie in [0, 1], got {}",
                self.detection_error_prob
            )));
        }
        if self.max_attempts < 1 {
            return Err(CoreError::Config("max_attempts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of one frame: the observation plus a partition of the transmitting
/// devices.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub observation: FrameObservation,
    pub acknowledged: Vec<DeviceId>,
    /// Devices retransmitting next frame, with their attempt counter advanced.
    pub retry: Vec<DeviceState>,
    pub dropped: Vec<DeviceId>,
    /// RAOs that truly held exactly one transmission (before detection errors).
    pub true_singletons: u32,
}

/// Simulate one frame for the given active devices.
pub fn run_frame<R: Rng + ?Sized>(active: &[DeviceState], config: &SimConfig, rng: &mut R) -> Result<FrameOutcome> {
    config.validate()?;
    if let Some(d) = active.iter().find(|d| !d.is_active || d.attempts_used >= config.max_attempts) {
        return Err(CoreError::Invariant(format!(
            "device {:?} cannot transmit (active = {}, attempts {} of {})",
            d.id, d.is_active, d.attempts_used, config.max_attempts
        )));
    }
    let f = config.rao_count as usize;
    let mut order: Vec<usize> = (0..active.len()).collect();
    order.sort_by_key(|&k| active[k].id);

    let mut choice = vec![0usize; active.len()];
    let mut load = vec![0u32; f];
    for &k in &order {
        let rao = rng.random_range(0..f);
        choice[k] = rao;
        load[rao] += 1;
    }

    let mut detected = vec![true; f];
    let mut obs = FrameObservation::new(0, 0, 0);
    let mut true_singletons = 0;
    for (rao, &n) in load.iter().enumerate() {
        if n == 1 {
            true_singletons += 1;
        }
        if n > 0 && rng.random_bool(config.detection_error_prob) {
            detected[rao] = false;
        }
        match (n, detected[rao]) {
            (0, _) | (_, false) => obs.idle_count += 1,
            (1, true) => obs.success_count += 1,
            _ => obs.collision_count += 1,
        }
    }

    let mut acknowledged = Vec::new();
    let mut retry = Vec::new();
    let mut dropped = Vec::new();
    for &k in &order {
        let dev = active[k];
        let rao = choice[k];
        if load[rao] == 1 && detected[rao] {
            acknowledged.push(dev.id);
        } else if dev.attempts_used + 1 < config.max_attempts {
            retry.push(DeviceState { attempts_used: dev.attempts_used + 1, ..dev });
        } else {
            dropped.push(dev.id);
        }
    }
    Ok(FrameOutcome { observation: obs, acknowledged, retry, dropped, true_singletons })
}

/// Merge retransmitting devices with newly generated packets into the next
/// frame's active set, ordered by device id.
pub fn step_backlog(prev_retry: Vec<DeviceState>, new_arrivals: Vec<DeviceState>) -> Result<Vec<DeviceState>> {
    let mut next = prev_retry;
    next.extend(new_arrivals);
    next.sort_by_key(|d| d.id);
    if let Some(w) = next.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(CoreError::Invariant(format!(
            "device {:?} is both retrying and generating a new packet",
            w[0].id
        )));
    }
    Ok(next)
}

/// Ground truth and observation for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameTrace {
    pub frame_index: u64,
    /// Devices transmitting in this frame (`N^t`).
    pub true_backlog: u32,
    pub observation: FrameObservation,
    /// Devices that will retransmit next frame.
    pub carryover_count: u32,
    /// Devices that exhausted their attempt budget this frame.
    pub dropped_count: u32,
    /// Newly generated packets that joined this frame.
    pub arrivals: u32,
}

/// Stateful episode driver combining the channel with a traffic source.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    traffic: TrafficSource,
    rng: SimRng,
    retry: Vec<DeviceState>,
    busy: Vec<bool>,
    frame: u64,
}

impl Simulator {
    pub fn new(config: SimConfig, traffic: &TrafficConfig) -> Result<Self> {
        config.validate()?;
        let traffic = TrafficSource::new(traffic)?;
        let busy = vec![false; traffic.device_count()];
        Ok(Self {
            config,
            traffic,
            rng: stream_rng(config.rng_seed, CHANNEL_STREAM),
            retry: Vec::new(),
            busy,
            frame: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Devices with a pending packet carried into the next frame.
    pub fn pending(&self) -> &[DeviceState] {
        &self.retry
    }

    pub fn step(&mut self) -> Result<FrameTrace> {
        let t = self.frame;
        let arrivals = self.traffic.arrivals_for_frame(t, &self.busy);
        for id in &arrivals {
            self.busy[id.0 as usize] = true;
        }
        let arrivals_count = arrivals.len() as u32;
        let retry = std::mem::take(&mut self.retry);
        let active = step_backlog(retry, arrivals.into_iter().map(DeviceState::fresh).collect())?;
        let outcome = run_frame(&active, &self.config, &mut self.rng)?;
        for id in outcome.acknowledged.iter().chain(&outcome.dropped) {
            self.busy[id.0 as usize] = false;
        }
        let trace = FrameTrace {
            frame_index: t,
            true_backlog: active.len() as u32,
            observation: outcome.observation,
            carryover_count: outcome.retry.len() as u32,
            dropped_count: outcome.dropped.len() as u32,
            arrivals: arrivals_count,
        };
        self.retry = outcome.retry;
        self.frame += 1;
        Ok(trace)
    }
}

/// Simulate `num_frames` consecutive frames.
pub fn run_episode(config: &SimConfig, traffic: &TrafficConfig, num_frames: usize) -> Result<Vec<FrameTrace>> {
    if num_frames < 1 {
        return Err(CoreError::Config("num_frames must be >= 1".into()));
    }
    let mut sim = Simulator::new(*config, traffic)?;
    (0..num_frames).map(|_| sim.step()).collect()
}
