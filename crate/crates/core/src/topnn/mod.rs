//! Topic-guided pointer-generator network.
//!
//! A topic GRU reads the class's top topic IDs; its final state seeds a code
//! GRU over the method's tokens. An attentional GRU decoder produces a
//! vocabulary distribution, and a soft switch `p_gen` mixes it with copy
//! mass placed on source positions, giving a distribution over the
//! extended vocabulary (summary vocabulary plus the instance's OOV tokens).
//!
//! The output distribution `P_vocab` is a softmax over a linear projection
//! of `[s_i; c_i]`.

mod checkpoint;
mod forward;
mod params;

use std::path::Path;

use thiserror::Error;

use crate::neuro::NeuroError;

pub use checkpoint::{blob_path, load_checkpoint, save_checkpoint, CheckpointEntry, CheckpointManifest};
pub use forward::{
    attention_traced, decode_step_traced, encode_code_traced, encode_source_traced, encode_topics_traced,
    forward_loss_traced, mix_distribution, teacher_forced_traced, DecoderStepOutput, EncoderOutputs,
    TracedSource, TracedStep,
};
pub use params::{BoundParams, ModelConfig, ModelParams, INIT_SCALE, PARAM_COUNT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("expected {expected} parameter arrays, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("parameter {name}: expected shape {expected:?}, got {got:?}")]
    ParamShape {
        name: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("expected {expected} topic ids, got {got}")]
    TopicCount { expected: usize, got: usize },
    #[error("{what} id {id} out of range (limit {limit})")]
    InvalidId { what: &'static str, id: usize, limit: usize },
    #[error("code sequence is empty")]
    EmptyCode,
    #[error("code sequence of {len} tokens exceeds max_code_len {max}")]
    CodeTooLong { len: usize, max: usize },
    #[error("malformed instance: {0}")]
    Instance(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error(transparent)]
    Neuro(#[from] NeuroError),
}

impl ModelError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        ModelError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests;
