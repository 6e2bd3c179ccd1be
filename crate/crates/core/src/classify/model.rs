use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lstm::{steps_from_ids, BiLstm};
use super::{BinaryClassifier, ClassifyError, TrainConfig};
use crate::embed::Vocab;
use crate::normalize::{encode, NormalizedMessage};

pub const MODEL_FORMAT: &str = "commit-quality.bilstm";
pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstmModel {
    pub config: TrainConfig,
    pub vocab: Vocab,
    pub network: BiLstm,
    pub threshold: f64,
}

impl BiLstmModel {
    pub fn new(config: TrainConfig, vocab: Vocab, network: BiLstm) -> Self {
        let threshold = config.threshold;
        BiLstmModel { config, vocab, network, threshold }
    }

    pub fn encode(&self, message: &NormalizedMessage) -> Vec<usize> {
        encode(&message.tokens, &self.vocab, self.config.max_len)
    }

    fn check(&self) -> Result<(), String> {
        self.network.check_shapes()?;
        let emb = self.network.embedding.matrix();
        if emb.rows() != self.vocab.len() {
            return Err(format!("embedding has {} rows, vocabulary has {} tokens", emb.rows(), self.vocab.len()));
        }
        if emb.cols() != self.config.embedding_dim || self.network.hidden() != self.config.hidden_dim {
            return Err("network dimensions disagree with the stored config".into());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(format!("threshold {} not in (0,1)", self.threshold));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifyError> {
        let mut w = BufWriter::new(File::create(path)?);
        save_model(self, &mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ClassifyError> {
        load_model(BufReader::new(File::open(path)?))
    }
}

impl BinaryClassifier for BiLstmModel {
    fn probability(&self, message: &NormalizedMessage) -> f64 {
        self.network.probability(&steps_from_ids(&self.encode(message)))
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'a str,
    version: u64,
    model: &'a BiLstmModel,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u64,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    model: BiLstmModel,
}

pub fn save_model<W: Write>(model: &BiLstmModel, sink: W) -> Result<(), ClassifyError> {
    let env = EnvelopeOut { format: MODEL_FORMAT, version: MODEL_VERSION, model };
    serde_json::to_writer(sink, &env).map_err(|e| ClassifyError::Io(e.into()))
}

pub fn load_model<R: Read>(mut source: R) -> Result<BiLstmModel, ClassifyError> {
    let mut buf = String::new();
    source.read_to_string(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::InvalidData => ClassifyError::Corrupt("not valid UTF-8".into()),
        _ => ClassifyError::Io(e),
    })?;
    let value: serde_json::Value = serde_json::from_str(&buf).map_err(|e| ClassifyError::Corrupt(e.to_string()))?;
    let header: Header = serde_json::from_value(value.clone()).map_err(|e| ClassifyError::Corrupt(format!("header: {e}")))?;
    if header.format != MODEL_FORMAT {
        return Err(ClassifyError::Corrupt(format!("unknown format {:?}", header.format)));
    }
    if header.version != MODEL_VERSION {
        return Err(ClassifyError::Version { found: header.version, expected: MODEL_VERSION });
    }
    let env: EnvelopeIn = serde_json::from_value(value).map_err(|e| ClassifyError::Corrupt(e.to_string()))?;
    env.model.check().map_err(ClassifyError::Corrupt)?;
    Ok(env.model)
}
