//! Flat `key = value` configuration files and the run manifest.
//!
//! The same file feeds feature extraction, the learner, the experiment
//! harness, and the synthetic generator; unknown keys are rejected so a
//! typo cannot silently fall back to a default.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::experiments::ExperimentConfig;
use crate::features::{Level, Variant, DEFAULT_DISCARD};
use crate::synthgen::GeneratorSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    Malformed(usize),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {detail}")]
    BadValue { key: String, detail: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything a run needs, resolved from defaults, config file, and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub generator: GeneratorSpec,
    pub n_min: usize,
    pub n_max: usize,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: ExperimentConfig::default(),
            generator: GeneratorSpec::default(),
            n_min: 1,
            n_max: 20,
            jobs: 1,
        }
    }
}

impl RunConfig {
    /// Apply one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |detail: String| ConfigError::BadValue {
            key: key.to_string(),
            detail,
        };
        macro_rules! parse {
            ($t:ty) => {
                value.parse::<$t>().map_err(|e| bad(e.to_string()))?
            };
        }
        match key {
            "variant" => {
                self.experiment.feature.variant = match value {
                    "orig" => Variant::Orig,
                    "ext" => Variant::Ext,
                    other => return Err(bad(format!("expected orig|ext, got `{other}`"))),
                }
            }
            "levels" => {
                let mut levels = BTreeSet::new();
                for part in value.split('+').filter(|p| !p.is_empty()) {
                    levels.insert(match part {
                        "exchange" => Level::Exchange,
                        "window" => Level::Window,
                        "dialogue" => Level::Dialogue,
                        other => {
                            return Err(bad(format!("unknown level `{other}`")))
                        }
                    });
                }
                self.experiment.feature.levels = levels;
            }
            "window_size" => self.experiment.feature.window_size = parse!(usize),
            "discard" => {
                self.experiment.feature.discard = value
                    .split(',')
                    .filter(|p| !p.is_empty())
                    .map(|p| p.trim().to_string())
                    .collect();
            }
            "folds" => self.experiment.folds = parse!(usize),
            "seed" => {
                let s = parse!(u64);
                self.experiment.seed = s;
                self.generator.seed = s;
            }
            "lambda" => self.experiment.hyper.lambda = parse!(f64),
            "epochs" => self.experiment.hyper.epochs = parse!(usize),
            "standardize" => self.experiment.hyper.standardize = parse!(u8) != 0,
            "n_min" => self.n_min = parse!(usize),
            "n_max" => self.n_max = parse!(usize),
            "jobs" => self.jobs = parse!(usize),
            "dialogues" => self.generator.dialogues = parse!(usize),
            "min_len" => self.generator.min_len = parse!(usize),
            "max_len" => self.generator.max_len = parse!(usize),
            "p_timeout" => self.generator.p_timeout = parse!(f64),
            "p_no_input" => self.generator.p_no_input = parse!(f64),
            "p_success" => self.generator.p_success = parse!(f64),
            "p_reject" => self.generator.p_reject = parse!(f64),
            "p_barge" => self.generator.p_barge = parse!(f64),
            "coupling" => self.generator.coupling = parse!(f64),
            "decay_prob" => self.generator.decay_prob = parse!(f64),
            "label_noise" => self.generator.label_noise = parse!(f64),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn load_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Malformed(i + 1))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn load_file<P: AsRef<Path>>(&mut self, path: P) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)?;
        self.load_str(&text)
    }

    /// Render the fully resolved configuration back to the file format.
    /// Feeding the output to [`RunConfig::load_str`] reproduces the config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let f = &self.experiment.feature;
        let _ = writeln!(s, "variant = {}", f.variant.as_str());
        let _ = writeln!(s, "levels = {}", f.levels_label());
        let _ = writeln!(s, "window_size = {}", f.window_size);
        let discard: Vec<&str> = f.discard.iter().map(|d| d.as_str()).collect();
        let _ = writeln!(s, "discard = {}", discard.join(","));
        let _ = writeln!(s, "folds = {}", self.experiment.folds);
        let _ = writeln!(s, "seed = {}", self.experiment.seed);
        let _ = writeln!(s, "lambda = {}", self.experiment.hyper.lambda);
        let _ = writeln!(s, "epochs = {}", self.experiment.hyper.epochs);
        let _ = writeln!(s, "standardize = {}", self.experiment.hyper.standardize as u8);
        let _ = writeln!(s, "n_min = {}", self.n_min);
        let _ = writeln!(s, "n_max = {}", self.n_max);
        let _ = writeln!(s, "jobs = {}", self.jobs);
        let g = &self.generator;
        let _ = writeln!(s, "dialogues = {}", g.dialogues);
        let _ = writeln!(s, "min_len = {}", g.min_len);
        let _ = writeln!(s, "max_len = {}", g.max_len);
        let _ = writeln!(s, "p_timeout = {}", g.p_timeout);
        let _ = writeln!(s, "p_no_input = {}", g.p_no_input);
        let _ = writeln!(s, "p_success = {}", g.p_success);
        let _ = writeln!(s, "p_reject = {}", g.p_reject);
        let _ = writeln!(s, "p_barge = {}", g.p_barge);
        let _ = writeln!(s, "coupling = {}", g.coupling);
        let _ = writeln!(s, "decay_prob = {}", g.decay_prob);
        let _ = writeln!(s, "label_noise = {}", g.label_noise);
        s
    }
}

/// Records what produced a set of report files.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: String,
    pub seed: u64,
    pub input_digests: Vec<(String, String)>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.render(),
            seed: config.experiment.seed,
            input_digests: Vec::new(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn add_input<P: AsRef<Path>>(&mut self, path: P) -> std::io::Result<()> {
        use sha2::{Digest, Sha256};
        let bytes = std::fs::read(&path)?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.input_digests
            .push((path.as_ref().display().to_string(), digest));
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tool_version = {}", self.tool_version);
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "timestamp = {}", self.timestamp);
        let _ = writeln!(s, "seed = {}", self.seed);
        for (path, digest) in &self.input_digests {
            let _ = writeln!(s, "input = {path} sha256:{digest}");
        }
        let _ = writeln!(s, "--- resolved configuration ---");
        s.push_str(&self.config);
        s
    }
}

/// Default discard list as a config value.
pub fn default_discard_value() -> String {
    DEFAULT_DISCARD.join(",")
}
