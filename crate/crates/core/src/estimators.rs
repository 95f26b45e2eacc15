//! Single-frame backlog estimators.
//!
//! * Method of moments, matching all three expected counts under a mean
//!   absolute discrepancy ([`mom_mae_estimate`]).
//! * Method of moments on the idle count alone, in closed form
//!   ([`mom_idle_estimate`]).
//! * Maximum likelihood over the exact occupancy distribution
//!   ([`ml_estimate`]).
//!
//! The likelihood `P{obs | n}` is built by dropping the `n` devices into the
//! `F` RAOs one at a time. After each placement the pair
//! `(idle RAOs, singleton RAOs)` is a Markov chain:
//!
//! ```text
//! (i, s) -> (i - 1, s + 1)  w.p. i / F        (lands on an idle RAO)
//! (i, s) -> (i, s - 1)      w.p. s / F        (lands on a singleton)
//! (i, s) -> (i, s)          w.p. (F-i-s) / F  (lands on a collision)
//! ```
//!
//! started from `(F, 0)`. Detection errors then turn each busy RAO idle
//! independently with probability `p_ed`, so the observed counts follow two
//! independent binomial thinnings of the true singleton and collision counts.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::sim::FrameObservation;

/// Expected idle, success and collision counts given `n` active devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTriple {
    pub expected_idle: f64,
    pub expected_success: f64,
    pub expected_collision: f64,
}

pub fn expected_moments(n: u32, rao_count: u32) -> MomentTriple {
    let f = f64::from(rao_count);
    let q = 1.0 - 1.0 / f;
    let expected_idle = f * q.powi(n as i32);
    let expected_success = if n == 0 { 0.0 } else { f64::from(n) * q.powi(n as i32 - 1) };
    let expected_collision = (f - expected_idle - expected_success).max(0.0);
    MomentTriple { expected_idle, expected_success, expected_collision }
}

/// `phi(n)`: mean absolute difference between expected and observed counts.
pub fn moment_discrepancy(moments: &MomentTriple, obs: &FrameObservation) -> f64 {
    ((moments.expected_idle - f64::from(obs.idle_count)).abs()
        + (moments.expected_success - f64::from(obs.success_count)).abs()
        + (moments.expected_collision - f64::from(obs.collision_count)).abs())
        / 3.0
}

/// Discrepancies within this distance are treated as ties.
const TIE_TOLERANCE: f64 = 1e-12;

/// Precomputed moments for `n = 0..=n_max`.
#[derive(Debug, Clone)]
pub struct MomentTable {
    rao_count: u32,
    moments: Vec<MomentTriple>,
}

impl MomentTable {
    pub fn new(rao_count: u32, n_max: u32) -> Result<Self> {
        if rao_count < 1 {
            return Err(CoreError::Config("rao_count must be >= 1".into()));
        }
        Ok(Self { rao_count, moments: (0..=n_max).map(|n| expected_moments(n, rao_count)).collect() })
    }

    pub fn n_max(&self) -> u32 {
        self.moments.len() as u32 - 1
    }

    /// Smallest `n` minimizing the moment discrepancy.
    pub fn estimate(&self, obs: &FrameObservation) -> Result<u32> {
        obs.validate(self.rao_count)?;
        let mut best = (0, f64::INFINITY);
        for (n, m) in self.moments.iter().enumerate() {
            let phi = moment_discrepancy(m, obs);
            if phi < best.1 - TIE_TOLERANCE {
                best = (n as u32, phi);
            }
        }
        Ok(best.0)
    }
}

/// Moment-matching estimate over `n in 0..=n_max`, ties to the smallest `n`.
pub fn mom_mae_estimate(obs: &FrameObservation, rao_count: u32, n_max: u32) -> Result<u32> {
    MomentTable::new(rao_count, n_max)?.estimate(obs)
}

/// Closed-form idle-count estimate `round(log_{1-1/F}(V_i / F))`, clamped to
/// `[0, n_max]`. No idle RAOs gives `n_max`.
pub fn mom_idle_estimate(obs: &FrameObservation, rao_count: u32, n_max: u32) -> Result<u32> {
    if rao_count == 1 {
        return Err(CoreError::DegenerateBase);
    }
    if rao_count == 0 {
        return Err(CoreError::Config("rao_count must be >= 1".into()));
    }
    obs.validate(rao_count)?;
    if obs.idle_count == 0 {
        return Ok(n_max);
    }
    if obs.idle_count == rao_count {
        return Ok(0);
    }
    let f = f64::from(rao_count);
    let n = (f64::from(obs.idle_count) / f).ln() / (1.0 - 1.0 / f).ln();
    Ok(n.round().clamp(0.0, f64::from(n_max)) as u32)
}

/// Vector over `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacklogDistribution {
    pub probs: Vec<f64>,
}

impl BacklogDistribution {
    pub fn n_max(&self) -> u32 {
        self.probs.len() as u32 - 1
    }

    /// Smallest index of the largest entry.
    pub fn argmax(&self) -> u32 {
        argmax_first(&self.probs)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

pub(crate) fn argmax_first(v: &[f64]) -> u32 {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = k;
        }
    }
    best as u32
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log-probabilities of the true `(idle, singleton)` occupancy after
/// `n = 0..=n_max` sequential placements into `F` RAOs.
#[derive(Debug, Clone)]
pub struct OccupancyTable {
    rao_count: u32,
    n_max: u32,
    /// `[n][i * (F + 1) + s]`
    log_probs: Vec<Vec<f64>>,
}

impl OccupancyTable {
    pub fn new(rao_count: u32, n_max: u32) -> Result<Self> {
        if rao_count < 1 {
            return Err(CoreError::Config("rao_count must be >= 1".into()));
        }
        let f = rao_count as usize;
        let side = f + 1;
        let ln_f = (f as f64).ln();
        let ln_count: Vec<f64> = (0..=f).map(|k| (k as f64).ln()).collect();
        let mut cur = vec![f64::NEG_INFINITY; side * side];
        cur[f * side] = 0.0;
        let mut log_probs = Vec::with_capacity(n_max as usize + 1);
        for _ in 0..=n_max {
            let mut next = vec![f64::NEG_INFINITY; side * side];
            for i in 0..=f {
                for s in 0..=f - i {
                    let lp = cur[i * side + s];
                    if lp == f64::NEG_INFINITY {
                        continue;
                    }
                    if i > 0 {
                        let k = (i - 1) * side + s + 1;
                        next[k] = log_add(next[k], lp + ln_count[i] - ln_f);
                    }
                    if s > 0 {
                        let k = i * side + s - 1;
                        next[k] = log_add(next[k], lp + ln_count[s] - ln_f);
                    }
                    let c = f - i - s;
                    if c > 0 {
                        let k = i * side + s;
                        next[k] = log_add(next[k], lp + ln_count[c] - ln_f);
                    }
                }
            }
            log_probs.push(std::mem::replace(&mut cur, next));
        }
        Ok(Self { rao_count, n_max, log_probs })
    }

    pub fn rao_count(&self) -> u32 {
        self.rao_count
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// `ln P{idle = i, singletons = s | n}`.
    pub fn log_prob(&self, n: u32, idle: u32, singletons: u32) -> f64 {
        let side = self.rao_count as usize + 1;
        if idle + singletons > self.rao_count {
            return f64::NEG_INFINITY;
        }
        self.log_probs[n as usize][idle as usize * side + singletons as usize]
    }

    /// `ln P{obs | n}` for every `n`, with detection errors of probability
    /// `p_ed` on busy RAOs.
    pub fn log_likelihoods(&self, obs: &FrameObservation, p_ed: f64) -> Result<Vec<f64>> {
        obs.validate(self.rao_count)?;
        if !(0.0..=1.0).contains(&p_ed) {
            return Err(CoreError::Config(format!("p_ed must lie in [0, 1], got {p_ed}")));
        }
        let f = self.rao_count;
        let (vs, vc) = (obs.success_count, obs.collision_count);
        // ln of binomial thinning weight: k of m busy RAOs misread as idle
        let ln_p = p_ed.ln();
        let ln_q = (1.0 - p_ed).ln();
        let ln_fact: Vec<f64> = std::iter::once(0.0)
            .chain((1..=f).scan(0.0, |acc, k| {
                *acc += f64::from(k).ln();
                Some(*acc)
            }))
            .collect();
        let ln_thin = |m: u32, kept: u32| -> f64 {
            let flipped = m - kept;
            let mut v = ln_fact[m as usize] - ln_fact[kept as usize] - ln_fact[flipped as usize];
            if flipped > 0 {
                v += f64::from(flipped) * ln_p;
            }
            if kept > 0 {
                v += f64::from(kept) * ln_q;
            }
            v
        };
        let mut pairs = Vec::new();
        for s in vs..=f {
            for c in vc..=(f - s) {
                let w = ln_thin(s, vs) + ln_thin(c, vc);
                if w > f64::NEG_INFINITY && !w.is_nan() {
                    pairs.push((f - s - c, s, w));
                }
            }
        }
        Ok((0..=self.n_max)
            .map(|n| {
                let terms: Vec<f64> = pairs
                    .iter()
                    .map(|&(i, s, w)| self.log_prob(n, i, s) + w)
                    .filter(|t| *t > f64::NEG_INFINITY)
                    .collect();
                let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if max == f64::NEG_INFINITY {
                    return max;
                }
                max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
            })
            .collect())
    }
}

/// Unnormalized likelihoods `P{obs | n}` for `n = 0..=n_max`.
pub fn occupancy_likelihoods(obs: &FrameObservation, rao_count: u32, n_max: u32, p_ed: f64) -> Result<BacklogDistribution> {
    let table = OccupancyTable::new(rao_count, n_max)?;
    let probs = table.log_likelihoods(obs, p_ed)?.into_iter().map(f64::exp).collect();
    Ok(BacklogDistribution { probs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlEstimate {
    pub backlog: u32,
    /// The observation has zero likelihood for every `n <= n_max`; `backlog`
    /// is then `n_max`.
    pub impossible: bool,
}

fn ml_from_log_likelihoods(ll: &[f64]) -> MlEstimate {
    let best = argmax_first(ll);
    if ll[best as usize] == f64::NEG_INFINITY {
        MlEstimate { backlog: ll.len() as u32 - 1, impossible: true }
    } else {
        MlEstimate { backlog: best, impossible: false }
    }
}

/// Maximum-likelihood backlog estimate (smallest maximizer).
pub fn ml_estimate(obs: &FrameObservation, rao_count: u32, n_max: u32, p_ed: f64) -> Result<MlEstimate> {
    let table = OccupancyTable::new(rao_count, n_max)?;
    Ok(ml_from_log_likelihoods(&table.log_likelihoods(obs, p_ed)?))
}

/// Maximum-likelihood estimator with a shared occupancy table and a cache of
/// already-seen observations.
#[derive(Debug, Clone)]
pub struct MlEstimator {
    table: Arc<OccupancyTable>,
    p_ed: f64,
    cache: HashMap<FrameObservation, MlEstimate>,
}

impl MlEstimator {
    /// `p_ed` is the detection-error probability the likelihood assumes; pass
    /// `0.0` for the detection-error-unaware variant.
    pub fn new(table: Arc<OccupancyTable>, p_ed: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_ed) {
            return Err(CoreError::Config(format!("p_ed must lie in [0, 1], got {p_ed}")));
        }
        Ok(Self { table, p_ed, cache: HashMap::new() })
    }

    pub fn estimate(&mut self, obs: &FrameObservation) -> Result<MlEstimate> {
        if let Some(e) = self.cache.get(obs) {
            return Ok(*e);
        }
        let e = ml_from_log_likelihoods(&self.table.log_likelihoods(obs, self.p_ed)?);
        self.cache.insert(*obs, e);
        Ok(e)
    }
}
