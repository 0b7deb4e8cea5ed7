//! Mono-source (global or forced attention) and chained dual-encoder models.

mod batch;
mod checkpoint;
mod layers;
mod network;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::editops::OverrunError;
use crate::numcore::NumError;
use crate::vocab::{Vocab, VocabError, VocabKind};

pub use batch::{Batch, Example, Padded};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use layers::{forced_pointer, EncoderStates};
pub use network::{Greedy, LossParts, Model, StepTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    Global,
    Forced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    MonoSource,
    Chained,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    Ops,
    Words,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub cell_size: usize,
    pub embedding_size: usize,
    pub src_vocab_limit: usize,
    pub input_vocab_limit: usize,
    pub output_vocab_limit: usize,
    pub attention: AttentionMode,
    pub architecture: Architecture,
    pub target: TargetMode,
    pub maxout_pieces: usize,
    pub dropout_p: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            cell_size: 128,
            embedding_size: 128,
            src_vocab_limit: 30000,
            input_vocab_limit: 30000,
            output_vocab_limit: 30000,
            attention: AttentionMode::Forced,
            architecture: Architecture::MonoSource,
            target: TargetMode::Ops,
            maxout_pieces: 2,
            dropout_p: 0.2,
            init_scale: 0.1,
            seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn mono_forced() -> Self {
        ModelConfig::default()
    }

    pub fn mono_global() -> Self {
        ModelConfig {
            attention: AttentionMode::Global,
            ..ModelConfig::default()
        }
    }

    pub fn chained() -> Self {
        ModelConfig {
            architecture: Architecture::Chained,
            ..ModelConfig::default()
        }
    }

    /// Plain attentional translation model, as used for back-generation.
    pub fn words() -> Self {
        ModelConfig {
            attention: AttentionMode::Global,
            target: TargetMode::Words,
            ..ModelConfig::default()
        }
    }

    pub fn with_sizes(mut self, cell_size: usize, embedding_size: usize) -> Self {
        self.cell_size = cell_size;
        self.embedding_size = embedding_size;
        self
    }

    pub fn is_chained(&self) -> bool {
        self.architecture == Architecture::Chained
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_owned()));
        if self.cell_size == 0 || self.embedding_size == 0 || self.maxout_pieces == 0 {
            return bad("sizes must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad("dropout_p must be in [0, 1)");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive");
        }
        if self.attention == AttentionMode::Forced && self.target != TargetMode::Ops {
            return bad("forced attention requires target=ops");
        }
        if self.is_chained() && (self.target != TargetMode::Ops || self.attention != AttentionMode::Forced) {
            return bad("the chained architecture requires target=ops and attention=forced");
        }
        Ok(())
    }
}

/// Vocabularies a model is built over. `src` is present only in chained
/// models; `input` indexes the encoder side (MT, or PE for generators).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelVocabs {
    pub src: Option<Vocab>,
    pub input: Vocab,
    pub output: Vocab,
}

impl ModelVocabs {
    pub fn check(&self, config: &ModelConfig) -> Result<(), ModelError> {
        let mismatch = |m: &str| Err(ModelError::VocabMismatch(m.to_owned()));
        if config.is_chained() != self.src.is_some() {
            return mismatch("a source vocabulary is required exactly for chained models");
        }
        if self.input.kind() != VocabKind::Words || self.src.as_ref().is_some_and(|v| v.kind() != VocabKind::Words) {
            return mismatch("encoder vocabularies must be word vocabularies");
        }
        let want = match config.target {
            TargetMode::Ops => VocabKind::Ops,
            TargetMode::Words => VocabKind::Words,
        };
        if self.output.kind() != want {
            return mismatch("output vocabulary kind does not match the target mode");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error("empty input sequence")]
    EmptyInput,
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("chained model needs a source sentence")]
    MissingSource,
    #[error("wrong model mode: {0}")]
    WrongMode(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Overrun(#[from] OverrunError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
