//! Why/What classifiers.
//!
//! Three binary detectors are trained on normalized messages: C-Why
//! (positive: missing Why), C-What (positive: missing What) and C-Good
//! (positive: well written). C-Good is by default the conjunction of the
//! first two; a directly trained model is also supported.

mod adam;
mod baseline;
mod compose;
pub mod lstm;
mod model;
pub mod oversample;
mod train;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::NormalizedMessage;

pub use adam::Adam;
pub use baseline::{LogRegModel, LOGREG_EPOCHS_CAP};
pub use compose::{compose_good, compose_good_direct, Composition, Hint};
pub use lstm::{BiLstm, Step};
pub use model::{load_model, save_model, BiLstmModel, MODEL_FORMAT, MODEL_VERSION};
pub use oversample::{adasyn, adasyn_allocation, random_oversample, smote, smote_point, Origin, Resampled};
pub use train::{train, train_with_report, Dataset, Oversampler, Technique, TrainConfig, TrainReport};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training data has a single class ({0} examples); both classes are required")]
    SingleClass(usize),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("oversampling: minority class has {minority} examples, needs more than k={k}; use a smaller k")]
    TooFewMinority { minority: usize, k: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("model file version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u64 },
    #[error("corrupted model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Embed(#[from] crate::embed::EmbedError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Four-way message quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityLabel {
    WhyAndWhat,
    NoWhy,
    NoWhat,
    Neither,
}

impl QualityLabel {
    pub const ALL: [QualityLabel; 4] =
        [QualityLabel::WhyAndWhat, QualityLabel::NoWhy, QualityLabel::NoWhat, QualityLabel::Neither];

    pub fn missing_why(self) -> bool {
        matches!(self, QualityLabel::NoWhy | QualityLabel::Neither)
    }

    pub fn missing_what(self) -> bool {
        matches!(self, QualityLabel::NoWhat | QualityLabel::Neither)
    }

    pub fn good(self) -> bool {
        self == QualityLabel::WhyAndWhat
    }

    pub fn from_flags(missing_why: bool, missing_what: bool) -> Self {
        match (missing_why, missing_what) {
            (false, false) => QualityLabel::WhyAndWhat,
            (true, false) => QualityLabel::NoWhy,
            (false, true) => QualityLabel::NoWhat,
            (true, true) => QualityLabel::Neither,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualityLabel::WhyAndWhat => "why_and_what",
            QualityLabel::NoWhy => "no_why",
            QualityLabel::NoWhat => "no_what",
            QualityLabel::Neither => "neither",
        }
    }

    pub fn target(self, target: Target) -> bool {
        match target {
            Target::MissingWhy => self.missing_why(),
            Target::MissingWhat => self.missing_what(),
            Target::Good => self.good(),
        }
    }
}

impl fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QualityLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QualityLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown quality label {s:?}"))
    }
}

/// Positive class of a binary detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    MissingWhy,
    MissingWhat,
    Good,
}

impl Target {
    pub fn caption(self) -> &'static str {
        match self {
            Target::MissingWhy => "Positive: missing Why / Negative: having Why",
            Target::MissingWhat => "Positive: missing What / Negative: having What",
            Target::Good => "Positive: well written / Negative: not well written",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Target::MissingWhy => "C-Why",
            Target::MissingWhat => "C-What",
            Target::Good => "C-Good",
        }
    }
}

impl FromStr for Target {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "why" | "missing_why" => Ok(Target::MissingWhy),
            "what" | "missing_what" => Ok(Target::MissingWhat),
            "good" => Ok(Target::Good),
            _ => Err(format!("unknown target {s:?}; expected why, what or good")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: bool,
}

/// A trained binary detector.
pub trait BinaryClassifier: Send + Sync {
    /// Probability of the positive class.
    fn probability(&self, message: &NormalizedMessage) -> f64;

    fn threshold(&self) -> f64 {
        0.5
    }

    fn predict(&self, message: &NormalizedMessage) -> Prediction {
        let probability = self.probability(message);
        Prediction { probability, label: probability >= self.threshold() }
    }
}

impl<T: BinaryClassifier + ?Sized> BinaryClassifier for Box<T> {
    fn probability(&self, message: &NormalizedMessage) -> f64 {
        (**self).probability(message)
    }
    fn threshold(&self) -> f64 {
        (**self).threshold()
    }
}

impl<T: BinaryClassifier + ?Sized> BinaryClassifier for &T {
    fn probability(&self, message: &NormalizedMessage) -> f64 {
        (**self).probability(message)
    }
    fn threshold(&self) -> f64 {
        (**self).threshold()
    }
}

/// Classifier returning a probability computed by a closure. Used as a stub
/// in tests and examples.
pub struct FnClassifier<F> {
    f: F,
    threshold: f64,
}

impl<F: Fn(&NormalizedMessage) -> f64 + Send + Sync> FnClassifier<F> {
    pub fn new(f: F) -> Self {
        FnClassifier { f, threshold: 0.5 }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }
}

impl<F: Fn(&NormalizedMessage) -> f64 + Send + Sync> BinaryClassifier for FnClassifier<F> {
    fn probability(&self, message: &NormalizedMessage) -> f64 {
        (self.f)(message)
    }
    fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Something that can fit a classifier on labeled messages.
pub trait Trainer: Sync {
    fn fit(&self, examples: &[(NormalizedMessage, bool)], seed: u64) -> Result<Fitted, ClassifyError>;
}

pub struct Fitted {
    pub model: Box<dyn BinaryClassifier>,
    /// Indices into the training slice of every example that contributed to
    /// the fitted model, including oversampling parents.
    pub source_indices: BTreeSet<usize>,
}
