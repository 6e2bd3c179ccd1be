//! Token vocabulary and the lookup-table embedder.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::{NormalizedMessage, Placeholder};
use crate::tensor::Matrix;

pub const DEFAULT_EMBEDDING_DIM: usize = 64;
pub const INIT_SCALE: f64 = 0.05;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmbedError {
    #[error("token id {id} out of range for vocabulary of {size}")]
    IdOutOfRange { id: usize, size: usize },
    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),
    #[error("embedding table has {rows} rows, vocabulary has {vocab}")]
    ShapeMismatch { rows: usize, vocab: usize },
}

/// Bijection between tokens and ids.
///
/// Id 0 is `<pad>`, id 1 is `<unk>`, followed by every placeholder token and
/// then corpus tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, usize>,
}

impl Vocab {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;
    pub const PAD_TOKEN: &'static str = "<pad>";
    pub const UNK_TOKEN: &'static str = "<unk>";

    fn reserved() -> Vec<String> {
        let mut v = vec![Self::PAD_TOKEN.to_string(), Self::UNK_TOKEN.to_string()];
        v.extend(Placeholder::ALL.iter().map(|p| p.token().to_string()));
        v
    }

    /// Reserved tokens followed by `tokens` in the given order, skipping repeats.
    pub fn from_tokens<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let mut all = Self::reserved();
        all.extend(tokens.into_iter().map(|t| t.as_ref().to_string()));
        let mut seen = std::collections::HashSet::new();
        all.retain(|t| seen.insert(t.clone()));
        Vocab::try_from(all).expect("reserved prefix present")
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn reserved_len() -> usize {
        2 + Placeholder::ALL.len()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> usize {
        self.id(token).unwrap_or(Self::UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }
}

impl TryFrom<Vec<String>> for Vocab {
    type Error = EmbedError;

    fn try_from(id_to_token: Vec<String>) -> Result<Self, Self::Error> {
        let reserved = Self::reserved();
        if id_to_token.len() < reserved.len() || id_to_token[..reserved.len()] != reserved[..] {
            return Err(EmbedError::InvalidVocab("missing reserved prefix".into()));
        }
        let mut token_to_id = HashMap::with_capacity(id_to_token.len());
        for (i, t) in id_to_token.iter().enumerate() {
            if token_to_id.insert(t.clone(), i).is_some() {
                return Err(EmbedError::InvalidVocab(format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocab { id_to_token, token_to_id })
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.id_to_token
    }
}

/// Vocabulary of every token seen at least `min_freq` times, most frequent
/// first, ties broken lexicographically.
pub fn build_vocab(messages: &[NormalizedMessage], min_freq: usize) -> Vocab {
    let min_freq = min_freq.max(1);
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for m in messages {
        for t in &m.tokens {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = freq.into_iter().filter(|&(_, n)| n >= min_freq).collect();
    // BTreeMap iteration is lexicographic, so a stable sort on count keeps ties ordered.
    ranked.sort_by_key(|&(_, n)| std::cmp::Reverse(n));
    Vocab::from_tokens(ranked.into_iter().map(|(t, _)| t))
}

/// Something that turns an id sequence into one vector per position.
///
/// The crate ships [`EmbeddingTable`]; a pretrained contextual encoder can
/// implement this trait instead.
pub trait Embedder {
    fn dim(&self) -> usize;
    fn embed_sequence(&self, ids: &[usize]) -> Result<Vec<Vec<f64>>, EmbedError>;

    /// Mean of the non-padding rows; the zero vector when all are padding.
    fn mean_pooled(&self, ids: &[usize]) -> Result<Vec<f64>, EmbedError> {
        let rows = self.embed_sequence(ids)?;
        let mut out = vec![0.0; self.dim()];
        let mut n = 0usize;
        for (row, &id) in rows.iter().zip(ids) {
            if id == Vocab::PAD {
                continue;
            }
            n += 1;
            for (o, x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        if n > 0 {
            out.iter_mut().for_each(|x| *x /= n as f64);
        }
        Ok(out)
    }
}

/// `V × E` lookup table; row 0 (`<pad>`) is always zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingTable {
    weights: Matrix,
}

impl EmbeddingTable {
    pub fn new_uniform<R: Rng>(vocab_size: usize, dim: usize, scale: f64, rng: &mut R) -> Self {
        let mut weights = Matrix::uniform(vocab_size, dim, scale, rng);
        weights.row_mut(Vocab::PAD).fill(0.0);
        EmbeddingTable { weights }
    }

    pub fn from_matrix(mut weights: Matrix) -> Self {
        if weights.rows() > 0 {
            weights.row_mut(Vocab::PAD).fill(0.0);
        }
        EmbeddingTable { weights }
    }

    pub fn vocab_size(&self) -> usize {
        self.weights.rows()
    }

    pub fn row(&self, id: usize) -> &[f64] {
        self.weights.row(id)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.weights
    }

    /// Mutable access for optimizers; callers must not touch row 0.
    pub(crate) fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    fn check(&self, id: usize) -> Result<(), EmbedError> {
        if id >= self.vocab_size() {
            Err(EmbedError::IdOutOfRange { id, size: self.vocab_size() })
        } else {
            Ok(())
        }
    }
}

impl Embedder for EmbeddingTable {
    fn dim(&self) -> usize {
        self.weights.cols()
    }

    fn embed_sequence(&self, ids: &[usize]) -> Result<Vec<Vec<f64>>, EmbedError> {
        ids.iter()
            .map(|&id| {
                self.check(id)?;
                Ok(self.row(id).to_vec())
            })
            .collect()
    }
}

pub fn embed_sequence(ids: &[usize], table: &EmbeddingTable) -> Result<Vec<Vec<f64>>, EmbedError> {
    table.embed_sequence(ids)
}
