//! Topic-guided pointer-generator summarization of Java methods.
//!
//! The offline phase extracts documented methods ([`corpus`]), mines class
//! topics with LDA ([`topics`]) and trains the network ([`topnn`],
//! [`pipeline`]). The online phase infers a class's topics, encodes a
//! method and decodes a summary, copying source identifiers when the
//! summary vocabulary lacks them. [`eval`] scores the results and [`cli`]
//! wires everything to the `codesum` binary.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod neuro;
pub mod pipeline;
pub mod synthetic;
pub mod topics;
pub mod topnn;
