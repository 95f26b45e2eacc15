//! Experiment configuration files (TOML).
//!
//! ```toml
//! schema_version = 1
//! output_dir = "out"
//! seeds = [0, 1, 2]
//!
//! [sim]
//! rao_count = 54
//! detection_error_prob = 0.05
//! max_attempts = 10
//!
//! [traffic]
//! bernoulli_device_count = 1000
//! bernoulli_prob = 0.005
//! periodic_device_count = 20
//! period_frames = 10
//! profile = { kind = "deterministic" }   # or { kind = "beta", alpha = 3.0, beta = 4.0 }
//! shared_phase = true
//!
//! [predictor]
//! n_max = 162
//! layer_sizes = [64, 64]
//! label_strategy = "mom_mae"             # mom_mae | mom_idle | ml | genie
//! mom_variant = "idle"                   # estimator behind the `mom` predictor
//! ml_detection_aware = true
//! literal_window = false
//! rmsprop_decay = 0.9
//! rmsprop_epsilon = 1e-8
//!
//! [hyper]
//! window = 20
//! learning_rate = 1e-4
//! dropout_rate = 0.2
//! minibatch = 64
//! buffer_size = 1000
//!
//! [pretrain]
//! frames = 100000
//! learning_rate = 1e-4
//! seed = 1000000
//! bernoulli_only = true
//! checkpoint = "pretrained.ckpt"         # relative paths resolve against output_dir
//!
//! [run]
//! frames = 20000
//! modes = ["mom", "ml", "offline_lstm", "online_lstm", "genie_lstm"]
//! eval_frames = 1000
//! moving_average = 100
//!
//! [sweep]                                # optional, exactly one axis
//! axis = "period_frames"                 # periodic_device_count | period_frames | beta_shape
//! values = [5, 10, 15, 20, 25, 30]
//! ```
//!
//! Every section and key is optional; missing ones take the defaults above.

use std::path::{Path, PathBuf};

use aloha_core::{
    LabelStrategy, PeriodicProfile, PredictorConfig, PredictorMode, SimConfig, TrafficConfig,
};
use aloha_neural::HyperParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Diagnostic, HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub rao_count: u32,
    pub detection_error_prob: f64,
    pub max_attempts: u32,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self { rao_count: d.rao_count, detection_error_prob: d.detection_error_prob, max_attempts: d.max_attempts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    pub bernoulli_device_count: u32,
    pub bernoulli_prob: f64,
    pub periodic_device_count: u32,
    pub period_frames: u32,
    pub profile: PeriodicProfile,
    pub shared_phase: bool,
}

impl Default for TrafficSection {
    fn default() -> Self {
        let d = TrafficConfig::default();
        Self {
            bernoulli_device_count: d.bernoulli_device_count,
            bernoulli_prob: d.bernoulli_prob,
            periodic_device_count: d.periodic_device_count,
            period_frames: d.period_frames,
            profile: d.profile,
            shared_phase: d.shared_phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperSection {
    pub window: usize,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub minibatch: usize,
    pub buffer_size: usize,
}

impl Default for HyperSection {
    fn default() -> Self {
        let d = HyperParams::default();
        Self {
            window: d.window,
            learning_rate: d.learning_rate,
            dropout_rate: d.dropout_rate,
            minibatch: d.minibatch,
            buffer_size: d.buffer_size,
        }
    }
}

impl HyperSection {
    pub fn to_params(&self) -> HyperParams {
        HyperParams {
            window: self.window,
            learning_rate: self.learning_rate,
            dropout_rate: self.dropout_rate,
            minibatch: self.minibatch,
            buffer_size: self.buffer_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainSection {
    /// Offline training frames (one optimizer step each).
    pub frames: usize,
    pub learning_rate: f64,
    /// Seeds the offline trace and the initial weights.
    pub seed: u64,
    /// Drop the periodic population from the offline traffic.
    pub bernoulli_only: bool,
    pub checkpoint: PathBuf,
}

impl Default for PretrainSection {
    fn default() -> Self {
        Self {
            frames: 100_000,
            learning_rate: HyperParams::default().learning_rate,
            seed: 1_000_000,
            bernoulli_only: true,
            checkpoint: PathBuf::from("pretrained.ckpt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Predicted frames per episode.
    pub frames: usize,
    pub modes: Vec<PredictorMode>,
    /// Trailing frames averaged into the headline error.
    pub eval_frames: usize,
    pub moving_average: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { frames: 20_000, modes: PredictorMode::ALL.to_vec(), eval_frames: 1000, moving_average: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    PeriodicDeviceCount { values: Vec<u32> },
    PeriodFrames { values: Vec<u32> },
    /// `[alpha, beta]` pairs; switches the periodic profile to Beta.
    BetaShape { values: Vec<[f64; 2]> },
}

impl Sweep {
    pub fn axis(&self) -> &'static str {
        match self {
            Self::PeriodicDeviceCount { .. } => "periodic_device_count",
            Self::PeriodFrames { .. } => "period_frames",
            Self::BetaShape { .. } => "beta_shape",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::PeriodicDeviceCount { values } | Self::PeriodFrames { values } => values.len(),
            Self::BetaShape { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One point of a sweep: its x coordinate, a printable label and the derived
/// configuration.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub x: f64,
    pub label: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub sim: SimSection,
    pub traffic: TrafficSection,
    pub predictor: PredictorConfig,
    pub hyper: HyperSection,
    pub pretrain: PretrainSection,
    pub run: RunSection,
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            output_dir: PathBuf::from("out"),
            seeds: (0..20).collect(),
            sim: SimSection::default(),
            traffic: TrafficSection::default(),
            predictor: PredictorConfig::default(),
            hyper: HyperSection::default(),
            pretrain: PretrainSection::default(),
            run: RunSection::default(),
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    /// Reduced setting that runs on a single core in minutes: one layer of 16
    /// units, minibatch 16, learning rate 1e-3.
    pub fn desk_scale() -> Self {
        let mut c = Self::default();
        c.predictor.layer_sizes = vec![16];
        c.hyper.minibatch = 16;
        c.hyper.learning_rate = 1e-3;
        c.pretrain.learning_rate = 1e-3;
        c
    }

    pub fn sim_config(&self, seed: u64) -> SimConfig {
        SimConfig {
            rao_count: self.sim.rao_count,
            detection_error_prob: self.sim.detection_error_prob,
            max_attempts: self.sim.max_attempts,
            rng_seed: seed,
        }
    }

    pub fn traffic_config(&self, seed: u64) -> TrafficConfig {
        let t = &self.traffic;
        TrafficConfig {
            bernoulli_device_count: t.bernoulli_device_count,
            bernoulli_prob: t.bernoulli_prob,
            periodic_device_count: t.periodic_device_count,
            period_frames: t.period_frames,
            profile: t.profile,
            shared_phase: t.shared_phase,
            rng_seed: seed,
        }
    }

    /// Checkpoint location with relative paths resolved against the output
    /// directory.
    pub fn checkpoint_path(&self) -> PathBuf {
        if self.pretrain.checkpoint.is_absolute() {
            self.pretrain.checkpoint.clone()
        } else {
            self.output_dir.join(&self.pretrain.checkpoint)
        }
    }

    /// SHA-256 of the configuration with the seed list and output directory
    /// removed. Trials may only be aggregated when their hashes agree.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("seeds");
            obj.remove("output_dir");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    /// All problems found, keyed by dotted path.
    pub fn issues(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, m: String| out.push((k.to_string(), m));
        if self.schema_version != SCHEMA_VERSION {
            push("schema_version", format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.schema_version));
        }
        if self.seeds.is_empty() {
            push("seeds", "at least one seed is required".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            push("seeds", "seeds must be distinct".into());
        }
        if self.sim.rao_count < 1 {
            push("sim.rao_count", "must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.sim.detection_error_prob) {
            push("sim.detection_error_prob", "must lie in [0, 1]".into());
        }
        if self.sim.max_attempts < 1 {
            push("sim.max_attempts", "must be >= 1".into());
        }
        if let Err(aloha_core::CoreError::Config(m)) = self.traffic_config(0).validate() {
            let (k, m) = nested("traffic", &self.traffic, &m);
            push(&k, m);
        }
        if let Err(e) = self.predictor.validate() {
            let m = match e {
                aloha_core::CoreError::Config(m) => m,
                other => other.to_string(),
            };
            let (k, m) = nested("predictor", &self.predictor, &m);
            push(&k, m);
        }
        if let Err(aloha_neural::NeuralError::InvalidHyperParam(m)) = self.hyper.to_params().validate() {
            let (k, m) = nested("hyper", &self.hyper, &m);
            push(&k, m);
        }
        if !(self.pretrain.learning_rate > 0.0 && self.pretrain.learning_rate.is_finite()) {
            push("pretrain.learning_rate", "must be positive and finite".into());
        }
        if self.run.frames < 1 {
            push("run.frames", "must be >= 1".into());
        }
        if self.run.modes.is_empty() {
            push("run.modes", "at least one mode is required".into());
        }
        if self.run.eval_frames < 1 || self.run.eval_frames > self.run.frames {
            push("run.eval_frames", format!("must lie in [1, run.frames = {}]", self.run.frames));
        }
        if self.run.moving_average < 1 {
            push("run.moving_average", "must be >= 1".into());
        }
        if self.predictor.label_strategy == LabelStrategy::Genie && self.run.modes.contains(&PredictorMode::OnlineLstm) {
            log::info!("online_lstm uses genie labels; it will coincide with genie_lstm");
        }
        if let Some(sweep) = &self.sweep {
            if sweep.is_empty() {
                push("sweep.values", "a sweep needs at least one value".into());
            } else {
                for p in self.sweep_points() {
                    for (k, m) in p.config.issues() {
                        push(&format!("sweep.values ({})", p.label), format!("{k}: {m}"));
                    }
                }
            }
        }
        out
    }

    /// Derived configurations, one per sweep value, or just `self` when no
    /// sweep is configured.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let base = ExperimentConfig { sweep: None, ..self.clone() };
        match &self.sweep {
            None => vec![SweepPoint { x: 0.0, label: "base".into(), config: base }],
            Some(Sweep::PeriodicDeviceCount { values }) => values
                .iter()
                .map(|&v| {
                    let mut c = base.clone();
                    c.traffic.periodic_device_count = v;
                    SweepPoint { x: f64::from(v), label: format!("np{v}"), config: c }
                })
                .collect(),
            Some(Sweep::PeriodFrames { values }) => values
                .iter()
                .map(|&v| {
                    let mut c = base.clone();
                    c.traffic.period_frames = v;
                    SweepPoint { x: f64::from(v), label: format!("tp{v}"), config: c }
                })
                .collect(),
            Some(Sweep::BetaShape { values }) => values
                .iter()
                .map(|&[alpha, beta]| {
                    let mut c = base.clone();
                    c.traffic.profile = PeriodicProfile::Beta { alpha, beta };
                    SweepPoint { x: alpha, label: format!("beta{alpha}_{beta}"), config: c }
                })
                .collect(),
        }
    }

    pub fn validate(&self, source: Option<&str>) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            return Ok(());
        }
        Err(HarnessError::Config(
            issues
                .into_iter()
                .map(|(key, message)| Diagnostic { line: source.and_then(|s| locate_key(s, &key)), key, message })
                .collect(),
        ))
    }
}

/// Attribute a message such as `"period_frames must be >= 1"` to
/// `section.period_frames` when its first word is a key of the section.
fn nested(section: &str, fields: &impl Serialize, message: &str) -> (String, String) {
    let value = serde_json::to_value(fields).unwrap_or_default();
    match message.split_once(' ') {
        Some((field, rest)) if value.get(field).is_some() => (format!("{section}.{field}"), rest.to_string()),
        _ => (section.to_string(), message.to_string()),
    }
}

/// Parse configuration text, apply `key=value` overrides and validate.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| toml_diagnostic(text, &e))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: ExperimentConfig = if overrides.is_empty() {
        toml::from_str(text).map_err(|e| toml_diagnostic(text, &e))?
    } else {
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            HarnessError::Config(vec![Diagnostic { line: None, key: "--set".into(), message: e.message().to_string() }])
        })?
    };
    config.validate(Some(text))?;
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    parse_config(&text, overrides)
}

fn toml_diagnostic(text: &str, e: &toml::de::Error) -> HarnessError {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    HarnessError::Config(vec![Diagnostic { line, key: String::new(), message: e.message().to_string() }])
}

/// `a.b.c=value`; the value is read as a TOML literal, falling back to a bare
/// string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let bad = |m: &str| HarnessError::Config(vec![Diagnostic { line: None, key: assignment.to_string(), message: m.to_string() }]);
    let (key, raw) = assignment.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().ok_or_else(|| bad("empty key"))?;
    let mut cur = table;
    for p in path {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| bad(&format!("`{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// 1-based line of `section.key` (or of a `[section]` header) in the
/// source, if written there.
fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let path = dotted.split_whitespace().next().unwrap_or(dotted);
    let (section, key) = match path.rsplit_once('.') {
        Some((s, k)) => (Some(s), k),
        None => (None, path),
    };
    let mut current: Option<&str> = None;
    let mut fallback = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            let name = t.trim_matches(|c| c == '[' || c == ']').trim();
            current = Some(name);
            if name == path || Some(name) == section {
                fallback = fallback.or(Some(i + 1));
            }
            continue;
        }
        if current == section && t.split('=').next().map(str::trim) == Some(key) {
            return Some(i + 1);
        }
    }
    fallback
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("", &[]).unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.sim_config(3).rao_count, 54);
        assert_eq!(c.hyper.to_params(), HyperParams::default());
    }

    #[test]
    fn documented_example_parses() {
        let text = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let c = parse_config(&text, &[]).unwrap();
        assert_eq!(c.seeds, vec![0, 1, 2]);
        assert_eq!(c.sweep_points().len(), 6);
        assert_eq!(c.sweep_points()[3].config.traffic.period_frames, 20);
    }

    #[test]
    fn overrides_replace_values() {
        let c = parse_config("[sim]\nrao_count = 10\n", &["sim.rao_count=12".into(), "run.modes=[\"mom\"]".into()]).unwrap();
        assert_eq!(c.sim.rao_count, 12);
        assert_eq!(c.run.modes, vec![PredictorMode::Mom]);
        let c = parse_config("", &["output_dir=results/a".into()]).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("results/a"));
    }

    #[test]
    fn diagnostics_point_at_lines() {
        let text = "schema_version = 1\n\n[sim]\nrao_count = 54\ndetection_error_prob = 1.5\n";
        match parse_config(text, &[]) {
            Err(HarnessError::Config(d)) => {
                assert_eq!(d.len(), 1);
                assert_eq!(d[0].line, Some(5));
                assert_eq!(d[0].key, "sim.detection_error_prob");
            }
            other => panic!("expected config error, got {other:?}"),
        }
        match parse_config("[sim]\nrao_cnt = 54\n", &[]) {
            Err(HarnessError::Config(d)) => assert_eq!(d[0].line, Some(2)),
            other => panic!("expected config error, got {other:?}"),
        }
        match parse_config("[hyper]\nminibatch = 5000\n", &[]) {
            Err(HarnessError::Config(d)) => {
                assert_eq!(d[0].key, "hyper.minibatch");
                assert_eq!(d[0].line, Some(2));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn hash_ignores_seeds_and_output() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seeds: vec![7], output_dir: "elsewhere".into(), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.sim.rao_count = 53;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn sweep_points_apply_axis() {
        let c = parse_config("[sweep]\naxis = \"beta_shape\"\nvalues = [[1.0, 1.0], [3.0, 3.0]]\n", &[]).unwrap();
        let pts = c.sweep_points();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].config.traffic.profile, PeriodicProfile::Beta { alpha: 3.0, beta: 3.0 });
        assert!(pts[1].config.sweep.is_none());
        assert!(parse_config("[sweep]\naxis = \"period_frames\"\nvalues = [0]\n", &[]).is_err());
    }
}
