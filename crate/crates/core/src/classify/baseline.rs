use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lstm::{steps_from_ids, Step};
use super::train::{check_classes, oversampled_training_set};
use super::{Adam, BinaryClassifier, ClassifyError, Oversampler, TrainConfig};
use crate::embed::{build_vocab, EmbeddingTable, Vocab, INIT_SCALE};
use crate::normalize::{encode, NormalizedMessage};
use crate::tensor::{dot, sigmoid, softplus};

/// Upper bound on baseline training epochs regardless of the config.
pub const LOGREG_EPOCHS_CAP: usize = 50;

/// Logistic regression over mean-pooled embeddings. Not persisted.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub vocab: Vocab,
    pub embedding: EmbeddingTable,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub max_len: usize,
    pub threshold: f64,
}

fn pooled(embedding: &EmbeddingTable, steps: &[Step]) -> Vec<f64> {
    let dim = embedding.matrix().cols();
    let mut out = vec![0.0; dim];
    if steps.is_empty() {
        return out;
    }
    let scale = 1.0 / steps.len() as f64;
    let mut add = |id: usize, w: f64| {
        for (o, e) in out.iter_mut().zip(embedding.row(id)) {
            *o += scale * w * e;
        }
    };
    for s in steps {
        match s {
            Step::Token(id) => add(*id, 1.0),
            Step::Mix(parts) => parts.iter().for_each(|&(id, w)| add(id, w)),
        }
    }
    out
}

impl LogRegModel {
    fn logit(&self, steps: &[Step]) -> f64 {
        dot(&self.weights, &pooled(&self.embedding, steps)) + self.bias
    }

    /// Fits the baseline; returns the model and the contributing indices.
    /// `Auto` oversampling falls back to random duplication.
    pub fn train(
        dataset: &[(NormalizedMessage, bool)],
        config: &TrainConfig,
    ) -> Result<(LogRegModel, BTreeSet<usize>), ClassifyError> {
        config.validate()?;
        let labels: Vec<bool> = dataset.iter().map(|(_, l)| *l).collect();
        check_classes(&labels)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let msgs: Vec<NormalizedMessage> = dataset.iter().map(|(m, _)| m.clone()).collect();
        let vocab = build_vocab(&msgs, config.min_freq);
        let ids: Vec<Vec<usize>> = msgs.iter().map(|m| encode(&m.tokens, &vocab, config.max_len)).collect();
        let dim = config.embedding_dim;
        let embedding = EmbeddingTable::new_uniform(vocab.len(), dim, INIT_SCALE, &mut rng);
        let oversampler = match config.oversampler {
            Oversampler::Auto => Oversampler::Random,
            o => o,
        };
        let set = oversampled_training_set(&ids, &labels, &embedding, oversampler, config, config.seed)?;
        let mut model = LogRegModel {
            vocab,
            embedding,
            weights: vec![0.0; dim],
            bias: 0.0,
            max_len: config.max_len,
            threshold: config.threshold,
        };
        let v = model.embedding.vocab_size();
        let mut opt = Adam::new(config.learning_rate, &[v * dim, dim, 1]);
        let mut order: Vec<usize> = (0..set.examples.len()).collect();
        for epoch in 0..config.epochs.min(LOGREG_EPOCHS_CAP) {
            order.shuffle(&mut rng);
            for (b, chunk) in order.chunks(config.batch_size).enumerate() {
                let mut g_emb = vec![0.0; v * dim];
                let mut g_w = vec![0.0; dim];
                let mut g_b = 0.0;
                let mut loss = 0.0;
                let n = chunk.len() as f64;
                for &k in chunk {
                    let (steps, y) = &set.examples[k];
                    let x = pooled(&model.embedding, steps);
                    let z = dot(&model.weights, &x) + model.bias;
                    loss += (softplus(z) - y * z) / n;
                    let d = (sigmoid(z) - y) / n;
                    g_b += d;
                    for (g, xi) in g_w.iter_mut().zip(&x) {
                        *g += d * xi;
                    }
                    let scale = d / steps.len().max(1) as f64;
                    let mut route = |id: usize, w: f64| {
                        for (j, wj) in model.weights.iter().enumerate() {
                            g_emb[id * dim + j] += scale * w * wj;
                        }
                    };
                    for s in steps {
                        match s {
                            Step::Token(id) => route(*id, 1.0),
                            Step::Mix(parts) => parts.iter().for_each(|&(id, w)| route(id, w)),
                        }
                    }
                }
                if !loss.is_finite() {
                    return Err(ClassifyError::NonFiniteLoss { epoch, batch: b });
                }
                let params = vec![
                    model.embedding.matrix_mut().as_mut_slice(),
                    model.weights.as_mut_slice(),
                    std::slice::from_mut(&mut model.bias),
                ];
                opt.step(params, &[&g_emb, &g_w, &[g_b]], &[dim, 0, 0]);
            }
        }
        let sources = set.parents;
        Ok((model, sources))
    }
}

impl BinaryClassifier for LogRegModel {
    fn probability(&self, message: &NormalizedMessage) -> f64 {
        let ids = encode(&message.tokens, &self.vocab, self.max_len);
        sigmoid(self.logit(&steps_from_ids(&ids)))
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}
