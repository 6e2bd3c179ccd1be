use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{steps_from_ids, BiLstm, Step};
use super::oversample::{adasyn, random_oversample, smote, Origin};
use super::{Adam, BiLstmModel, ClassifyError, Fitted, LogRegModel, Target, Trainer};
use crate::embed::{build_vocab, Embedder, Vocab, INIT_SCALE};
use crate::normalize::{encode, NormalizedMessage};
use crate::tensor::sigmoid;

pub type Dataset = Vec<(NormalizedMessage, bool)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Oversampler {
    None,
    Random,
    Smote,
    Adasyn,
    /// Try random, SMOTE and ADASYN; keep the most accurate on validation.
    #[default]
    Auto,
}

impl FromStr for Oversampler {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Oversampler::None),
            "random" => Ok(Oversampler::Random),
            "smote" => Ok(Oversampler::Smote),
            "adasyn" => Ok(Oversampler::Adasyn),
            "auto" => Ok(Oversampler::Auto),
            _ => Err(format!("unknown oversampler {s:?}")),
        }
    }
}

impl fmt::Display for Oversampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Oversampler::None => "none",
            Oversampler::Random => "random",
            Oversampler::Smote => "smote",
            Oversampler::Adasyn => "adasyn",
            Oversampler::Auto => "auto",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    #[default]
    BiLstm,
    /// Logistic regression over mean-pooled embeddings.
    LogReg,
}

impl FromStr for Technique {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bilstm" | "bi_lstm" => Ok(Technique::BiLstm),
            "logreg" | "log_reg" => Ok(Technique::LogReg),
            _ => Err(format!("unknown technique {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub max_len: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub oversampler: Oversampler,
    pub target: Target,
    pub threshold: f64,
    pub smote_k: usize,
    pub adasyn_beta: f64,
    pub min_freq: usize,
    /// Fraction of the training data held out for early stopping and
    /// oversampler selection. Zero disables both.
    pub validation_fraction: f64,
    pub technique: Technique,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embedding_dim: 64,
            hidden_dim: 64,
            max_len: 200,
            learning_rate: 1e-3,
            epochs: 100,
            patience: 10,
            batch_size: 32,
            seed: 0,
            oversampler: Oversampler::Auto,
            target: Target::MissingWhy,
            threshold: 0.5,
            smote_k: 5,
            adasyn_beta: 1.0,
            min_freq: 1,
            validation_fraction: 0.1,
            technique: Technique::BiLstm,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let err = |m: String| Err(ClassifyError::Config(m));
        if self.embedding_dim == 0 || self.hidden_dim == 0 || self.max_len == 0 || self.batch_size == 0 {
            return err("embedding_dim, hidden_dim, max_len and batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return err(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return err(format!("threshold {} not in (0,1)", self.threshold));
        }
        if !(0.0..0.5).contains(&self.validation_fraction) {
            return err(format!("validation_fraction {} not in [0,0.5)", self.validation_fraction));
        }
        if !(self.adasyn_beta > 0.0 && self.adasyn_beta <= 1.0) {
            return err(format!("adasyn_beta {} not in (0,1]", self.adasyn_beta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub oversampler: Oversampler,
    pub epochs_run: usize,
    pub best_epoch: Option<usize>,
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub validation_accuracy: Option<f64>,
    pub training_accuracy: f64,
    /// Accuracy of each candidate when the oversampler was chosen automatically.
    pub candidates: Vec<(Oversampler, f64)>,
    /// Dataset indices that influenced the model.
    pub source_indices: BTreeSet<usize>,
}

/// Train/validation split, stratified by label.
pub(crate) fn split_validation(labels: &[bool], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let mut n_val = (idx.len() as f64 * fraction).round() as usize;
        if fraction > 0.0 && idx.len() >= 4 {
            n_val = n_val.max(1);
        }
        n_val = n_val.min(idx.len().saturating_sub(1));
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Token weights of a mean-pooled sequence, scaled by `scale`.
fn pooled_weights(ids: &[usize], scale: f64, into: &mut BTreeMap<usize, f64>) {
    let tokens: Vec<usize> = ids.iter().copied().filter(|&id| id != Vocab::PAD).collect();
    if tokens.is_empty() {
        return;
    }
    let w = scale / tokens.len() as f64;
    for id in tokens {
        *into.entry(id).or_insert(0.0) += w;
    }
}

/// Expanded training set: step sequences, targets and the training-set
/// positions each example came from.
pub(crate) struct TrainingSet {
    pub examples: Vec<(Vec<Step>, f64)>,
    pub parents: BTreeSet<usize>,
}

pub(crate) fn oversampled_training_set(
    ids: &[Vec<usize>],
    labels: &[bool],
    embedder: &dyn Embedder,
    oversampler: Oversampler,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainingSet, ClassifyError> {
    let target = |b: bool| if b { 1.0 } else { 0.0 };
    let origins: Vec<(Origin, bool)> = match oversampler {
        Oversampler::None | Oversampler::Auto => {
            (0..ids.len()).map(|i| (Origin::Original(i), labels[i])).collect()
        }
        Oversampler::Random => {
            let r = random_oversample(&(0..ids.len()).collect::<Vec<_>>(), labels, seed)?;
            r.origins.into_iter().zip(r.labels).collect()
        }
        Oversampler::Smote | Oversampler::Adasyn => {
            let vectors = ids.iter().map(|s| embedder.mean_pooled(s)).collect::<Result<Vec<_>, _>>()?;
            let r = if oversampler == Oversampler::Smote {
                smote(&vectors, labels, config.smote_k, seed)?
            } else {
                adasyn(&vectors, labels, config.smote_k, seed, config.adasyn_beta)?
            };
            r.origins.into_iter().zip(r.labels).collect()
        }
    };
    let mut parents = BTreeSet::new();
    let examples = origins
        .into_iter()
        .map(|(origin, label)| {
            parents.extend(origin.parents());
            let steps = match origin {
                Origin::Original(i) | Origin::Duplicate(i) => steps_from_ids(&ids[i]),
                Origin::Synthetic { base, neighbor, lambda } => {
                    let mut w = BTreeMap::new();
                    pooled_weights(&ids[base], 1.0 - lambda, &mut w);
                    pooled_weights(&ids[neighbor], lambda, &mut w);
                    vec![Step::Mix(w.into_iter().collect())]
                }
            };
            (steps, target(label))
        })
        .collect();
    Ok(TrainingSet { examples, parents })
}

fn accuracy(net: &BiLstm, examples: &[(Vec<Step>, f64)], threshold: f64) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let hits = examples
        .iter()
        .filter(|(s, y)| (sigmoid(net.logit(s)) >= threshold) == (*y >= 0.5))
        .count();
    hits as f64 / examples.len() as f64
}

fn as_batch(examples: &[(Vec<Step>, f64)]) -> Vec<(&[Step], f64)> {
    examples.iter().map(|(s, y)| (s.as_slice(), *y)).collect()
}

pub(crate) fn check_classes(labels: &[bool]) -> Result<(), ClassifyError> {
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(ClassifyError::SingleClass(labels.len()));
    }
    Ok(())
}

fn train_once(
    dataset: &[(NormalizedMessage, bool)],
    config: &TrainConfig,
    oversampler: Oversampler,
) -> Result<(BiLstmModel, TrainReport), ClassifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let labels: Vec<bool> = dataset.iter().map(|(_, l)| *l).collect();
    let (train_idx, val_idx) = split_validation(&labels, config.validation_fraction, &mut rng);
    let train_labels: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
    check_classes(&train_labels)?;

    let train_msgs: Vec<NormalizedMessage> = train_idx.iter().map(|&i| dataset[i].0.clone()).collect();
    let vocab = build_vocab(&train_msgs, config.min_freq);
    let encode_at = |i: usize| encode(&dataset[i].0.tokens, &vocab, config.max_len);
    let train_ids: Vec<Vec<usize>> = train_idx.iter().map(|&i| encode_at(i)).collect();

    let mut net = BiLstm::new(vocab.len(), config.embedding_dim, config.hidden_dim, INIT_SCALE, &mut rng);
    let set = oversampled_training_set(&train_ids, &train_labels, &net.embedding, oversampler, config, config.seed)?;
    let val: Vec<(Vec<Step>, f64)> = val_idx
        .iter()
        .map(|&i| (steps_from_ids(&encode_at(i)), if labels[i] { 1.0 } else { 0.0 }))
        .collect();

    let sizes: Vec<usize> = net.param_slices().iter().map(|(_, s)| s.len()).collect();
    let frozen = net.frozen_prefixes();
    let mut opt = Adam::new(config.learning_rate, &sizes);
    let mut order: Vec<usize> = (0..set.examples.len()).collect();
    let mut report = TrainReport {
        oversampler,
        epochs_run: 0,
        best_epoch: None,
        train_loss: Vec::new(),
        validation_loss: Vec::new(),
        validation_accuracy: None,
        training_accuracy: 0.0,
        candidates: Vec::new(),
        source_indices: set.parents.iter().map(|&p| train_idx[p]).chain(val_idx.iter().copied()).collect(),
    };
    let mut best: Option<(f64, BiLstm)> = None;
    let mut since_best = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<(&[Step], f64)> = chunk.iter().map(|&k| (set.examples[k].0.as_slice(), set.examples[k].1)).collect();
            let (loss, grad) = net.loss_and_grad(&batch);
            if !loss.is_finite() {
                return Err(ClassifyError::NonFiniteLoss { epoch, batch: b });
            }
            epoch_loss += loss * chunk.len() as f64;
            let grads: Vec<&[f64]> = grad.param_slices().into_iter().map(|(_, s)| s).collect();
            opt.step(net.param_slices_mut(), &grads, &frozen);
        }
        report.epochs_run = epoch + 1;
        report.train_loss.push(epoch_loss / set.examples.len().max(1) as f64);
        if !val.is_empty() {
            let val_loss = net.loss(&as_batch(&val));
            report.validation_loss.push(val_loss);
            if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
                best = Some((val_loss, net.clone()));
                report.best_epoch = Some(epoch);
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience {
                    break;
                }
            }
        }
    }
    if let Some((_, best_net)) = best {
        net = best_net;
    }
    report.training_accuracy = accuracy(&net, &set.examples[..train_ids.len()], config.threshold);
    if !val.is_empty() {
        report.validation_accuracy = Some(accuracy(&net, &val, config.threshold));
    }
    let mut resolved = config.clone();
    resolved.oversampler = oversampler;
    Ok((BiLstmModel::new(resolved, vocab, net), report))
}

/// Trains a Bi-LSTM detector. With [`Oversampler::Auto`] the three
/// oversamplers are tried and the one with the best validation accuracy
/// (training accuracy when no validation split is configured) is kept.
pub fn train_with_report(
    dataset: &[(NormalizedMessage, bool)],
    config: &TrainConfig,
) -> Result<(BiLstmModel, TrainReport), ClassifyError> {
    config.validate()?;
    let labels: Vec<bool> = dataset.iter().map(|(_, l)| *l).collect();
    check_classes(&labels)?;
    if config.oversampler != Oversampler::Auto {
        return train_once(dataset, config, config.oversampler);
    }
    let mut best: Option<(f64, BiLstmModel, TrainReport)> = None;
    let mut candidates = Vec::new();
    let mut last_err = None;
    for candidate in [Oversampler::Random, Oversampler::Smote, Oversampler::Adasyn] {
        match train_once(dataset, config, candidate) {
            Ok((model, report)) => {
                let score = report.validation_accuracy.unwrap_or(report.training_accuracy);
                candidates.push((candidate, score));
                if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                    best = Some((score, model, report));
                }
            }
            Err(e @ ClassifyError::TooFewMinority { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let (_, model, mut report) = best.ok_or_else(|| last_err.expect("at least one candidate ran"))?;
    report.candidates = candidates;
    Ok((model, report))
}

pub fn train(dataset: &[(NormalizedMessage, bool)], config: &TrainConfig) -> Result<BiLstmModel, ClassifyError> {
    train_with_report(dataset, config).map(|(m, _)| m)
}

impl Trainer for TrainConfig {
    fn fit(&self, examples: &[(NormalizedMessage, bool)], seed: u64) -> Result<Fitted, ClassifyError> {
        let mut config = self.clone();
        config.seed = seed;
        match self.technique {
            Technique::BiLstm => {
                let (model, report) = train_with_report(examples, &config)?;
                Ok(Fitted { model: Box::new(model), source_indices: report.source_indices })
            }
            Technique::LogReg => {
                let (model, sources) = LogRegModel::train(examples, &config)?;
                Ok(Fitted { model: Box::new(model), source_indices: sources })
            }
        }
    }
}
