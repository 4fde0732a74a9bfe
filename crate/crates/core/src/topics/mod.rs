//! Topic mining over class documents: LDA fitted by collapsed Gibbs
//! sampling, held-out inference of per-class topic proportions, and the
//! top-N topic sequence fed to the summarizer.

mod lda;
mod persist;

pub use lda::{
    corpus_log_likelihood, fit_gibbs, fit_gibbs_traced, infer_theta, top_n_topics, topic_top_words,
    LdaConfig, TopicDistribution, TopicModel,
};
pub use persist::beta_path;

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopicError {
    #[error("invalid LDA configuration: {0}")]
    Config(String),
    #[error("no documents to fit")]
    EmptyCorpus,
    #[error("document {document} has token {token} outside vocabulary of size {vocab_size}")]
    TokenOutOfRange {
        document: usize,
        token: usize,
        vocab_size: usize,
    },
    #[error("requested {requested} topics but the model has {k}")]
    TooManyTopics { requested: usize, k: usize },
    #[error("{documents} documents but {thetas} topic distributions")]
    ThetaCount { documents: usize, thetas: usize },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed topic model: {0}")]
    Format(String),
}

impl TopicError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        TopicError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
