//! `key = value` configuration covering every tunable default.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error so typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classify::TrainConfig;
use crate::corpus::forge::DEFAULT_API_URL;
use crate::sampling::SampleSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {reason}")]
    Value { line: usize, key: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub train: TrainConfig,
    pub sample: SampleSpec,
    pub folds: usize,
    pub stratify: bool,
    pub curate_threshold: f64,
    pub models_dir: PathBuf,
    pub api_url: String,
    pub page_size: usize,
    /// Drop messages that are not predominantly ASCII letters at ingest.
    pub english_only: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            train: TrainConfig::default(),
            sample: SampleSpec::default(),
            folds: 10,
            stratify: true,
            curate_threshold: 0.5,
            models_dir: PathBuf::from("models"),
            api_url: DEFAULT_API_URL.to_string(),
            page_size: 100,
            english_only: true,
        }
    }
}

fn parse<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value { line, key: key.to_string(), reason: e.to_string() })
}

impl Config {
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (key, value) = l.split_once('=').ok_or(ConfigError::Syntax { line })?;
            c.set(line, key.trim(), value.trim())?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
        let t = &mut self.train;
        match key {
            "seed" => {
                self.seed = parse(line, key, v)?;
                t.seed = self.seed;
            }
            "embedding_dim" => t.embedding_dim = parse(line, key, v)?,
            "hidden_dim" => t.hidden_dim = parse(line, key, v)?,
            "max_len" => t.max_len = parse(line, key, v)?,
            "learning_rate" => t.learning_rate = parse(line, key, v)?,
            "epochs" => t.epochs = parse(line, key, v)?,
            "patience" => t.patience = parse(line, key, v)?,
            "batch_size" => t.batch_size = parse(line, key, v)?,
            "oversampler" => t.oversampler = parse(line, key, v)?,
            "target" => t.target = parse(line, key, v)?,
            "threshold" => t.threshold = parse(line, key, v)?,
            "smote_k" => t.smote_k = parse(line, key, v)?,
            "adasyn_beta" => t.adasyn_beta = parse(line, key, v)?,
            "min_freq" => t.min_freq = parse(line, key, v)?,
            "validation_fraction" => t.validation_fraction = parse(line, key, v)?,
            "technique" => t.technique = parse(line, key, v)?,
            "confidence_z" => self.sample.confidence_z = parse(line, key, v)?,
            "margin" => self.sample.margin_e = parse(line, key, v)?,
            "proportion" => self.sample.proportion_p = parse(line, key, v)?,
            "folds" => self.folds = parse(line, key, v)?,
            "stratify" => self.stratify = parse(line, key, v)?,
            "curate_threshold" => self.curate_threshold = parse(line, key, v)?,
            "models_dir" => self.models_dir = PathBuf::from(v),
            "api_url" => self.api_url = v.to_string(),
            "page_size" => self.page_size = parse(line, key, v)?,
            "english_only" => self.english_only = parse(line, key, v)?,
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
        }
        Ok(())
    }

    /// The configuration in the file syntax; parsing the result gives back
    /// an equal config.
    pub fn render(&self) -> String {
        let t = &self.train;
        let mut out = String::new();
        let pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("embedding_dim", t.embedding_dim.to_string()),
            ("hidden_dim", t.hidden_dim.to_string()),
            ("max_len", t.max_len.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("epochs", t.epochs.to_string()),
            ("patience", t.patience.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("oversampler", t.oversampler.to_string()),
            ("target", target_key(t.target).to_string()),
            ("threshold", t.threshold.to_string()),
            ("smote_k", t.smote_k.to_string()),
            ("adasyn_beta", t.adasyn_beta.to_string()),
            ("min_freq", t.min_freq.to_string()),
            ("validation_fraction", t.validation_fraction.to_string()),
            ("technique", technique_key(t.technique).to_string()),
            ("confidence_z", self.sample.confidence_z.to_string()),
            ("margin", self.sample.margin_e.to_string()),
            ("proportion", self.sample.proportion_p.to_string()),
            ("folds", self.folds.to_string()),
            ("stratify", self.stratify.to_string()),
            ("curate_threshold", self.curate_threshold.to_string()),
            ("models_dir", self.models_dir.display().to_string()),
            ("api_url", self.api_url.clone()),
            ("page_size", self.page_size.to_string()),
            ("english_only", self.english_only.to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn target_key(t: crate::classify::Target) -> &'static str {
    use crate::classify::Target::*;
    match t {
        MissingWhy => "why",
        MissingWhat => "what",
        Good => "good",
    }
}

fn technique_key(t: crate::classify::Technique) -> &'static str {
    match t {
        crate::classify::Technique::BiLstm => "bilstm",
        crate::classify::Technique::LogReg => "logreg",
    }
}
