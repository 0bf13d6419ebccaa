//! Run configuration and its flat `key = value` text form.
//!
//! Keys are the long CLI flag names (`horizon`, `replay-length`, ...). Blank
//! lines and lines starting with `#` are ignored. Booleans are `true` or
//! `false`; reals accept `inf`.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::envs::EnvId;
use crate::error::{Error, Result};

/// Keys written into run manifests that are not configuration.
pub const MANIFEST_KEYS: [&str; 4] = [
    "manifest-version",
    "metrics-schema",
    "score-normalization",
    "engine-version",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub env: EnvId,
    pub total_steps: u64,
    /// `N`: environment steps per iteration.
    pub horizon: usize,
    /// `M_PPO`: base mini-batch size.
    pub minibatch: usize,
    /// `L`: stored batches.
    pub replay_length: usize,
    /// `S`
    pub epochs: usize,
    pub gamma: f64,
    pub lambda: f64,
    /// Initial Adam step size.
    pub step_size: f64,
    /// Initial clipping factor.
    pub clip: f64,
    /// Initial batch drop factor `ε_b`.
    pub batch_drop: f64,
    pub value_coef: f64,
    pub adaptive: bool,
    pub seed: u64,
    pub normalize_advantages: bool,
    pub bootstrap_on_timeout: bool,
    /// Keep `M = M_PPO` and sweep the whole active pool each epoch.
    pub fixed_minibatch: bool,
    /// Draw contiguous runs instead of uniform samples (comparison only).
    pub episodic_minibatch: bool,
    pub out_dir: Option<PathBuf>,
}

impl TrainConfig {
    /// Iterations in a full run.
    pub fn iterations(&self) -> u64 {
        self.total_steps / self.horizon as u64
    }

    /// Gradient updates per iteration in the standard mode.
    pub fn updates_per_iteration(&self) -> usize {
        self.epochs * self.horizon / self.minibatch
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key));
        }
        out
    }

    fn get(&self, key: &str) -> String {
        match key {
            "env" => self.env.to_string(),
            "total-steps" => self.total_steps.to_string(),
            "horizon" => self.horizon.to_string(),
            "minibatch" => self.minibatch.to_string(),
            "replay-length" => self.replay_length.to_string(),
            "epochs" => self.epochs.to_string(),
            "gamma" => self.gamma.to_string(),
            "lambda" => self.lambda.to_string(),
            "step-size" => self.step_size.to_string(),
            "clip" => self.clip.to_string(),
            "batch-drop" => self.batch_drop.to_string(),
            "value-coef" => self.value_coef.to_string(),
            "adaptive" => self.adaptive.to_string(),
            "seed" => self.seed.to_string(),
            "normalize-advantages" => self.normalize_advantages.to_string(),
            "bootstrap-on-timeout" => self.bootstrap_on_timeout.to_string(),
            "fixed-minibatch" => self.fixed_minibatch.to_string(),
            "episodic-minibatch" => self.episodic_minibatch.to_string(),
            "out-dir" => self
                .out_dir
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    pub fn to_builder(&self) -> ConfigBuilder {
        let mut b = ConfigBuilder::default();
        for key in KEYS {
            let v = self.get(key);
            if !v.is_empty() {
                b.set(key, &v).expect("own values always parse");
            }
        }
        b
    }
}

/// Every configuration key, in manifest order.
pub const KEYS: [&str; 19] = [
    "env",
    "total-steps",
    "horizon",
    "minibatch",
    "replay-length",
    "epochs",
    "gamma",
    "lambda",
    "step-size",
    "clip",
    "batch-drop",
    "value-coef",
    "adaptive",
    "seed",
    "normalize-advantages",
    "bootstrap-on-timeout",
    "fixed-minibatch",
    "episodic-minibatch",
    "out-dir",
];

/// Partially specified configuration; unset fields take defaults on `build`.
///
/// Defaults follow the adaptive replay setup: `N = 2048`, `M_PPO = 64`,
/// `L = 8`, `S = 10`, `γ = 0.99`, `λ = 0.95`, step size `3e-4`, clip `0.4`,
/// batch drop `0.25`, `c_v = 1`, adaptive on, `T = 489·2048`. The
/// environment has no default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigBuilder {
    env: Option<String>,
    total_steps: Option<u64>,
    horizon: Option<usize>,
    minibatch: Option<usize>,
    replay_length: Option<usize>,
    epochs: Option<usize>,
    gamma: Option<f64>,
    lambda: Option<f64>,
    step_size: Option<f64>,
    clip: Option<f64>,
    batch_drop: Option<f64>,
    value_coef: Option<f64>,
    adaptive: Option<bool>,
    seed: Option<u64>,
    normalize_advantages: Option<bool>,
    bootstrap_on_timeout: Option<bool>,
    fixed_minibatch: Option<bool>,
    episodic_minibatch: Option<bool>,
    out_dir: Option<PathBuf>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines, later lines overriding earlier ones.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut b = Self::default();
        b.merge_kv(text)?;
        Ok(b)
    }

    pub fn merge_kv(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got {line:?}"),
                )
            })?;
            let (key, value) = (key.trim(), value.trim());
            if MANIFEST_KEYS.contains(&key) {
                continue;
            }
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim_start_matches("--");
        match key {
            "env" => self.env = Some(value.to_string()),
            "total-steps" => self.total_steps = Some(parse(key, value)?),
            "horizon" => self.horizon = Some(parse(key, value)?),
            "minibatch" => self.minibatch = Some(parse(key, value)?),
            "replay-length" => self.replay_length = Some(parse(key, value)?),
            "epochs" => self.epochs = Some(parse(key, value)?),
            "gamma" => self.gamma = Some(parse(key, value)?),
            "lambda" => self.lambda = Some(parse(key, value)?),
            "step-size" => self.step_size = Some(parse(key, value)?),
            "clip" => self.clip = Some(parse(key, value)?),
            "batch-drop" => self.batch_drop = Some(parse(key, value)?),
            "value-coef" => self.value_coef = Some(parse(key, value)?),
            "adaptive" => self.adaptive = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "normalize-advantages" => self.normalize_advantages = Some(parse(key, value)?),
            "bootstrap-on-timeout" => self.bootstrap_on_timeout = Some(parse(key, value)?),
            "fixed-minibatch" => self.fixed_minibatch = Some(parse(key, value)?),
            "episodic-minibatch" => self.episodic_minibatch = Some(parse(key, value)?),
            "out-dir" => self.out_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// The output directory, if one was given.
    pub fn out_dir(&self) -> Option<&std::path::Path> {
        self.out_dir.as_deref()
    }

    pub fn build(&self) -> Result<TrainConfig> {
        let env_id = self
            .env
            .as_deref()
            .ok_or_else(|| Error::config("env", "missing (pendulum, pointmass or synth-K)"))?;
        let env = env_id
            .parse::<EnvId>()
            .map_err(|e| Error::config("env", e.to_string()))?;
        let horizon = self.horizon.unwrap_or(2048);
        let cfg = TrainConfig {
            env,
            total_steps: self.total_steps.unwrap_or(489 * horizon as u64),
            horizon,
            minibatch: self.minibatch.unwrap_or(64),
            replay_length: self.replay_length.unwrap_or(8),
            epochs: self.epochs.unwrap_or(10),
            gamma: self.gamma.unwrap_or(0.99),
            lambda: self.lambda.unwrap_or(0.95),
            step_size: self.step_size.unwrap_or(3e-4),
            clip: self.clip.unwrap_or(0.4),
            batch_drop: self.batch_drop.unwrap_or(0.25),
            value_coef: self.value_coef.unwrap_or(1.0),
            adaptive: self.adaptive.unwrap_or(true),
            seed: self.seed.unwrap_or(0),
            normalize_advantages: self.normalize_advantages.unwrap_or(true),
            bootstrap_on_timeout: self.bootstrap_on_timeout.unwrap_or(false),
            fixed_minibatch: self.fixed_minibatch.unwrap_or(false),
            episodic_minibatch: self.episodic_minibatch.unwrap_or(false),
            out_dir: self.out_dir.clone(),
        };
        validate(&cfg)?;
        Ok(cfg)
    }
}

fn validate(c: &TrainConfig) -> Result<()> {
    let positive = [
        ("horizon", c.horizon),
        ("minibatch", c.minibatch),
        ("replay-length", c.replay_length),
        ("epochs", c.epochs),
    ];
    for (field, v) in positive {
        if v == 0 {
            return Err(Error::config(field, "must be at least 1"));
        }
    }
    if !c.horizon.is_multiple_of(c.minibatch) {
        return Err(Error::config(
            "minibatch",
            format!("horizon {} is not divisible by {}", c.horizon, c.minibatch),
        ));
    }
    if c.total_steps == 0 || !c.total_steps.is_multiple_of(c.horizon as u64) {
        return Err(Error::config(
            "total-steps",
            format!(
                "{} is not a positive multiple of horizon {}",
                c.total_steps, c.horizon
            ),
        ));
    }
    for (field, v) in [("gamma", c.gamma), ("lambda", c.lambda)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::config(field, format!("{v} is outside [0, 1]")));
        }
    }
    for (field, v) in [
        ("step-size", c.step_size),
        ("clip", c.clip),
        ("value-coef", c.value_coef),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::config(
                field,
                format!("{v} must be finite and non-negative"),
            ));
        }
    }
    if c.batch_drop.is_nan() || c.batch_drop < 0.0 {
        return Err(Error::config(
            "batch-drop",
            format!("{} must be non-negative", c.batch_drop),
        ));
    }
    if c.fixed_minibatch && c.episodic_minibatch {
        return Err(Error::config(
            "episodic-minibatch",
            "cannot be combined with fixed-minibatch",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_env_names_the_field() {
        let err = ConfigBuilder::new().build().unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "env"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn defaults() {
        let c = ConfigBuilder::from_kv("env = pendulum")
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(
            (c.horizon, c.minibatch, c.replay_length, c.epochs),
            (2048, 64, 8, 10)
        );
        assert_eq!((c.gamma, c.lambda, c.step_size), (0.99, 0.95, 3e-4));
        assert_eq!((c.clip, c.batch_drop, c.value_coef), (0.4, 0.25, 1.0));
        assert!(c.adaptive && c.normalize_advantages && !c.bootstrap_on_timeout);
        assert_eq!(c.updates_per_iteration(), 320);
        assert_eq!(c.total_steps % 2048, 0);
    }

    #[test]
    fn kv_round_trip_and_comments() {
        let text = "# comment\nenv = synth-4\n\nhorizon=512\nbatch-drop = inf\nseed = 7\n";
        let c = ConfigBuilder::from_kv(text).unwrap().build().unwrap();
        assert_eq!(c.env, EnvId::Synth(4));
        assert_eq!(c.batch_drop, f64::INFINITY);
        let again = ConfigBuilder::from_kv(&c.to_kv()).unwrap().build().unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn invalid_values_name_their_field() {
        let cases = [
            ("horizon = 100\nminibatch = 64", "minibatch"),
            ("gamma = 1.5", "gamma"),
            ("replay-length = 0", "replay-length"),
            ("horizon = 64\ntotal-steps = 100", "total-steps"),
            ("epochs = x", "epochs"),
            ("colour = blue", "colour"),
            ("batch-drop = -1", "batch-drop"),
            ("env = mujoco", "env"),
        ];
        for (text, field) in cases {
            let mut b = ConfigBuilder::from_kv("env = pendulum").unwrap();
            let err = b
                .merge_kv(text)
                .and_then(|_| b.build().map(|_| ()))
                .unwrap_err();
            match err {
                Error::Config { field: f, .. } => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn manifest_keys_are_skipped() {
        let b = ConfigBuilder::from_kv("manifest-version = 1\nenv = pointmass").unwrap();
        assert_eq!(b.build().unwrap().env, EnvId::PointMass);
    }
}
