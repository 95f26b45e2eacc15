//! Aggregation of per-frame errors across seeds.

use aloha_core::{PredictionRecord, PredictorMode};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{HarnessError, Result};

/// Per-frame absolute errors of one mode on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecords {
    pub config_hash: String,
    pub seed: u64,
    pub mode: PredictorMode,
    pub records: Vec<PredictionRecord>,
}

impl TrialRecords {
    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| f64::from(r.abs_error))
    }

    /// Mean error over the trailing `frames` records.
    pub fn tail_mean(&self, frames: usize) -> f64 {
        let start = self.records.len().saturating_sub(frames);
        mean(&self.records[start..].iter().map(|r| f64::from(r.abs_error)).collect::<Vec<_>>())
    }

    /// Mean error over the trailing `frames` records whose frame index
    /// satisfies `keep`.
    pub fn tail_mean_where(&self, frames: usize, keep: impl Fn(u64) -> bool) -> f64 {
        let start = self.records.len().saturating_sub(frames);
        let v: Vec<f64> = self.records[start..]
            .iter()
            .filter(|r| keep(r.frame_index))
            .map(|r| f64::from(r.abs_error))
            .collect();
        mean(&v)
    }
}

/// Mean and standard error across seeds, per frame and over the evaluation
/// tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub config_hash: String,
    pub mode: PredictorMode,
    pub seeds: Vec<u64>,
    pub frames: usize,
    pub eval_frames: usize,
    /// Mean over seeds of the error at each predicted frame.
    pub per_frame_mean: Vec<f64>,
    pub per_frame_stderr: Vec<f64>,
    pub moving_average_window: usize,
    /// Trailing moving average of `per_frame_mean`.
    pub moving_average: Vec<f64>,
    /// Per-seed mean over the last `eval_frames` frames, in seed order.
    pub per_seed_eval_mean: Vec<f64>,
    pub eval_mean: f64,
    pub eval_stderr: f64,
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation divided by `sqrt(n)`; zero for a single value.
pub fn std_error(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

/// Combine trials of one mode. Trials are ordered by seed first, so the
/// result does not depend on the input order.
pub fn aggregate_trials(trials: &[TrialRecords], eval_frames: usize, moving_average_window: usize) -> Result<MetricSummary> {
    let first = trials.first().ok_or_else(|| HarnessError::Aggregate("no trials".into()))?;
    if let Some(t) = trials.iter().find(|t| t.config_hash != first.config_hash) {
        return Err(HarnessError::MixedConfigs(first.config_hash.clone(), t.config_hash.clone()));
    }
    if trials.iter().any(|t| t.mode != first.mode) {
        return Err(HarnessError::Aggregate("trials mix predictor modes".into()));
    }
    let frames = first.records.len();
    if trials.iter().any(|t| t.records.len() != frames) {
        return Err(HarnessError::Aggregate("trials have different lengths".into()));
    }
    if eval_frames == 0 || eval_frames > frames || moving_average_window == 0 {
        return Err(HarnessError::Aggregate(format!(
            "eval window {eval_frames} / moving average {moving_average_window} invalid for {frames} frames"
        )));
    }
    let mut ordered: Vec<&TrialRecords> = trials.iter().collect();
    ordered.sort_by_key(|t| t.seed);
    if ordered.windows(2).any(|w| w[0].seed == w[1].seed) {
        return Err(HarnessError::Aggregate("duplicate seed".into()));
    }

    let mut per_frame_mean = Vec::with_capacity(frames);
    let mut per_frame_stderr = Vec::with_capacity(frames);
    let mut column = Vec::with_capacity(ordered.len());
    for k in 0..frames {
        column.clear();
        column.extend(ordered.iter().map(|t| f64::from(t.records[k].abs_error)));
        per_frame_mean.push(mean(&column));
        per_frame_stderr.push(std_error(&column));
    }
    let moving_average = (0..frames)
        .map(|k| {
            let lo = (k + 1).saturating_sub(moving_average_window);
            mean(&per_frame_mean[lo..=k])
        })
        .collect();
    let per_seed_eval_mean: Vec<f64> = ordered.iter().map(|t| t.tail_mean(eval_frames)).collect();
    Ok(MetricSummary {
        config_hash: first.config_hash.clone(),
        mode: first.mode,
        seeds: ordered.iter().map(|t| t.seed).collect(),
        frames,
        eval_frames,
        per_frame_mean,
        per_frame_stderr,
        moving_average_window,
        moving_average,
        eval_mean: mean(&per_seed_eval_mean),
        eval_stderr: std_error(&per_seed_eval_mean),
        per_seed_eval_mean,
    })
}

/// Two-sided paired t-test on `a[i] - b[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    pub mean_difference: f64,
    pub t_statistic: f64,
    pub p_value: f64,
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(HarnessError::Aggregate("paired test needs two equal-length samples of size >= 2".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&d);
    let se = std_error(&d);
    let (t, p) = if se == 0.0 {
        if m == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(m), 0.0)
        }
    } else {
        let t = m / se;
        let dist = StudentsT::new(0.0, 1.0, (d.len() - 1) as f64).expect("positive degrees of freedom");
        (t, 2.0 * dist.cdf(-t.abs()))
    };
    Ok(PairedTest { mean_difference: m, t_statistic: t, p_value: p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(seed: u64, errors: &[u32], hash: &str) -> TrialRecords {
        TrialRecords {
            config_hash: hash.into(),
            seed,
            mode: PredictorMode::Mom,
            records: errors
                .iter()
                .enumerate()
                .map(|(k, &e)| PredictionRecord { frame_index: k as u64 + 1, true_backlog: e, predicted: 0, abs_error: e })
                .collect(),
        }
    }

    #[test]
    fn single_seed_has_zero_stderr() {
        let s = aggregate_trials(&[trial(0, &[1, 2, 3], "h")], 2, 2).unwrap();
        assert!(s.per_frame_stderr.iter().all(|&x| x == 0.0));
        assert_eq!(s.eval_stderr, 0.0);
        assert_eq!(s.eval_mean, 2.5);
        assert_eq!(s.moving_average, vec![1.0, 1.5, 2.5]);
    }

    #[test]
    fn two_constant_seeds_average() {
        let s = aggregate_trials(&[trial(0, &[2; 4], "h"), trial(1, &[5; 4], "h")], 4, 1).unwrap();
        assert!(s.per_frame_mean.iter().all(|&x| x == 3.5));
        assert_eq!(s.eval_mean, 3.5);
    }

    #[test]
    fn order_independent() {
        let a = [trial(3, &[1, 4, 2], "h"), trial(1, &[0, 7, 3], "h"), trial(2, &[5, 5, 1], "h")];
        let mut b = a.clone();
        b.reverse();
        let sa = aggregate_trials(&a, 2, 2).unwrap();
        let sb = aggregate_trials(&b, 2, 2).unwrap();
        assert_eq!(serde_json::to_string(&sa).unwrap(), serde_json::to_string(&sb).unwrap());
        assert_eq!(sa.seeds, vec![1, 2, 3]);
    }

    #[test]
    fn mixed_hashes_refused() {
        let r = aggregate_trials(&[trial(0, &[1], "a"), trial(1, &[1], "b")], 1, 1);
        assert!(matches!(r, Err(HarnessError::MixedConfigs(..))));
    }

    #[test]
    fn paired_test_matches_reference() {
        // scipy.stats.ttest_rel([1,2,3,4,6], [2,2,5,5,9]) -> t = -2.7456, p = 0.051606
        let t = paired_t_test(&[1.0, 2.0, 3.0, 4.0, 6.0], &[2.0, 2.0, 5.0, 5.0, 9.0]).unwrap();
        assert!((t.t_statistic + 2.745_625_891_934_577).abs() < 1e-9);
        assert!((t.p_value - 0.051_605_957_811_174_75).abs() < 1e-9);
    }
}
