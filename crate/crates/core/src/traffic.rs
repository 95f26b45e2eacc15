//! Packet generators: per-device Bernoulli traffic plus periodic devices that
//! fire once per period, either at a fixed phase or at a Beta-distributed
//! offset inside the period.
//!
//! Device ids `0..N_u` are Bernoulli devices, `N_u..N_u + N_p` periodic ones.
//! A device that still holds a packet generates nothing new.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::checked_beta_reg;

use crate::error::{CoreError, Result};
use crate::sim::{stream_rng, DeviceId, SimRng};

const TRAFFIC_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeriodicProfile {
    /// One packet exactly at the device's phase in each period.
    Deterministic,
    /// One packet per period at an offset drawn from Beta(alpha, beta)
    /// discretized over the period's frames.
    Beta { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficConfig {
    pub bernoulli_device_count: u32,
    pub bernoulli_prob: f64,
    pub periodic_device_count: u32,
    pub period_frames: u32,
    pub profile: PeriodicProfile,
    /// All periodic devices share phase 0; otherwise each draws a fixed
    /// uniform phase in `[0, period)`.
    pub shared_phase: bool,
    pub rng_seed: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            bernoulli_device_count: 1000,
            bernoulli_prob: 0.005,
            periodic_device_count: 20,
            period_frames: 10,
            profile: PeriodicProfile::Deterministic,
            shared_phase: true,
            rng_seed: 0,
        }
    }
}

impl TrafficConfig {
    /// No packets at all.
    pub fn silent() -> Self {
        Self { bernoulli_device_count: 0, bernoulli_prob: 0.0, periodic_device_count: 0, ..Self::default() }
    }

    /// Only the Bernoulli population.
    pub fn bernoulli_only(&self) -> Self {
        Self { periodic_device_count: 0, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.bernoulli_prob) {
            return Err(CoreError::Config(format!(
                "bernoulli_prob must lie in [0, 1], got {}",
                self.bernoulli_prob
            )));
        }
        if self.period_frames < 1 {
            return Err(CoreError::Config("period_frames must be >= 1".into()));
        }
        if let PeriodicProfile::Beta { alpha, beta } = self.profile {
            if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                return Err(CoreError::Config(format!(
                    "Beta shape parameters must be positive and finite, got ({alpha}, {beta})"
                )));
            }
        }
        self.bernoulli_device_count
            .checked_add(self.periodic_device_count)
            .ok_or_else(|| CoreError::Config("device count overflows u32".into()))?;
        Ok(())
    }

    /// Mean number of packets generated per frame if no device were ever busy.
    pub fn nominal_rate(&self) -> f64 {
        f64::from(self.bernoulli_device_count) * self.bernoulli_prob
            + f64::from(self.periodic_device_count) / f64::from(self.period_frames)
    }
}

/// Probability that a packet falls in each frame of a period when its
/// position within the period follows Beta(alpha, beta).
///
/// Entry `k` is the Beta mass on `[k/T, (k+1)/T)`, obtained from differences
/// of the regularized incomplete beta function. Cells in the upper half are
/// evaluated through the reflected function so that `alpha == beta` gives an
/// exactly symmetric vector.
pub fn beta_offset_pmf(alpha: f64, beta: f64, period: u32) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(CoreError::Config(format!(
            "Beta shape parameters must be positive and finite, got ({alpha}, {beta})"
        )));
    }
    if period < 1 {
        return Err(CoreError::Config("period must be >= 1".into()));
    }
    let t = f64::from(period);
    let cdf = |a: f64, b: f64, x: f64| {
        checked_beta_reg(a, b, x).map_err(|e| CoreError::Config(format!("incomplete beta failed: {e}")))
    };
    let mut pmf = Vec::with_capacity(period as usize);
    for k in 0..period {
        let mass = if 2 * k < period {
            cdf(alpha, beta, f64::from(k + 1) / t)? - cdf(alpha, beta, f64::from(k) / t)?
        } else {
            cdf(beta, alpha, f64::from(period - k) / t)? - cdf(beta, alpha, f64::from(period - k - 1) / t)?
        };
        pmf.push(mass.max(0.0));
    }
    let total: f64 = pmf.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(CoreError::Config(format!("Beta({alpha}, {beta}) discretization has no mass")));
    }
    pmf.iter_mut().for_each(|p| *p /= total);
    Ok(pmf)
}

/// Stateful generator for one episode.
#[derive(Debug, Clone)]
pub struct TrafficSource {
    config: TrafficConfig,
    rng: SimRng,
    phases: Vec<u32>,
    /// Cumulative offset distribution within a period; last entry is 1.
    offset_cdf: Vec<f64>,
    current_period: Vec<Option<u64>>,
    /// May be negative for the partial period before frame 0.
    fire_at: Vec<i64>,
}

impl TrafficSource {
    pub fn new(config: &TrafficConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(config.rng_seed, TRAFFIC_STREAM);
        let np = config.periodic_device_count as usize;
        let phases = if config.shared_phase {
            vec![0; np]
        } else {
            (0..np).map(|_| rng.random_range(0..config.period_frames)).collect()
        };
        let offset_cdf = match config.profile {
            PeriodicProfile::Deterministic => vec![1.0],
            PeriodicProfile::Beta { alpha, beta } => {
                let mut acc = 0.0;
                let mut cdf: Vec<f64> = beta_offset_pmf(alpha, beta, config.period_frames)?
                    .into_iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                *cdf.last_mut().expect("period >= 1") = 1.0;
                cdf
            }
        };
        Ok(Self {
            config: *config,
            rng,
            phases,
            offset_cdf,
            current_period: vec![None; np],
            fire_at: vec![0; np],
        })
    }

    pub fn config(&self) -> &TrafficConfig {
        &self.config
    }

    pub fn device_count(&self) -> usize {
        (self.config.bernoulli_device_count + self.config.periodic_device_count) as usize
    }

    pub fn is_periodic(&self, id: DeviceId) -> bool {
        id.0 >= self.config.bernoulli_device_count
    }

    fn sample_offset(&mut self) -> u64 {
        if self.offset_cdf.len() == 1 {
            return 0;
        }
        let u: f64 = self.rng.random();
        self.offset_cdf.iter().position(|&c| u < c).unwrap_or(self.offset_cdf.len() - 1) as u64
    }

    /// Devices generating a new packet in frame `frame`. `busy[id]` marks
    /// devices that still hold a packet; they are skipped. Frames must be
    /// requested in increasing order.
    pub fn arrivals_for_frame(&mut self, frame: u64, busy: &[bool]) -> Vec<DeviceId> {
        let nu = self.config.bernoulli_device_count;
        let mut out = Vec::new();
        if self.config.bernoulli_prob > 0.0 {
            for i in 0..nu {
                if !busy[i as usize] && self.rng.random_bool(self.config.bernoulli_prob) {
                    out.push(DeviceId(i));
                }
            }
        }
        let period = u64::from(self.config.period_frames);
        for d in 0..self.phases.len() {
            let shifted = frame + period - u64::from(self.phases[d]);
            let index = shifted / period;
            if self.current_period[d] != Some(index) {
                self.current_period[d] = Some(index);
                let start = frame as i64 - (shifted % period) as i64;
                self.fire_at[d] = start + self.sample_offset() as i64;
            }
            let id = nu + d as u32;
            if self.fire_at[d] == frame as i64 && !busy[id as usize] {
                out.push(DeviceId(id));
            }
        }
        out
    }
}
