//! Corpus construction: Java-like source → classes and commented methods →
//! normalized tokens, vocabularies and training instances.

mod extract;
mod instance;
mod lexer;
mod split;
mod summary;
mod vocab;

pub use extract::{extract_classes, extract_dir, extract_file, normalize_token, ExtractOutput, RawClass, RawMethod};
pub use instance::{
    build_instances, build_records, class_topics, lda_document, Encoder, InstanceConfig, InstanceRecord, OovMap,
    SkipReport, TrainingInstance, MIN_CODE_TOKENS, MIN_SUMMARY_TOKENS,
};
pub use lexer::{lex, Token, TokenKind};
pub use split::split_identifier;
pub use summary::{extract_summary, summary_tokens};
pub use vocab::{Vocabulary, BOS, EOS, PAD, RESERVED, UNK};

use std::path::PathBuf;

use thiserror::Error;

use crate::topics::TopicError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("lex error at byte {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("unbalanced braces at byte {offset}")]
    UnbalancedBraces { offset: usize },
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("vocabulary max_size must exceed the 4 reserved entries, got {0}")]
    VocabSize(usize),
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("{}: {message}", .path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Topic(#[from] TopicError),
}
