//! Training with Adam, and decoding back to surface summaries.

mod decode;
mod train;

use std::path::Path;

use thiserror::Error;

use crate::topnn::ModelError;

pub use decode::{
    beam_search, beam_search_with, decode_instances, detokenize, greedy_decode, greedy_decode_with,
    read_decoded, write_decoded, BeamHypothesis, DecodedSummary, ModelStepper, StepModel,
};
pub use train::{
    adam_step, clip_global_norm, read_loss_log, teacher_forced_accuracy, train, train_from, write_loss_log, AdamState, EpochLoss,
    TrainConfig, TrainOutput,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("no training instances")]
    NoInstances,
    #[error("non-finite loss on instance {index} in epoch {epoch}")]
    NonFiniteLoss { index: usize, epoch: usize },
    #[error("extended id {0} is neither in the vocabulary nor the oov map")]
    UnknownId(usize),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, e: impl ToString) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
