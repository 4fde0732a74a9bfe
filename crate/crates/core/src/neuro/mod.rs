//! Minimal differentiable numeric substrate: dense arrays, the primitive
//! operations the summarization network needs, a reverse-mode tape, a GRU
//! cell and a finite-difference gradient checker.

mod array;
mod gradcheck;
mod gru;
mod tape;

pub use array::Array2;
pub use gradcheck::{grad_check, relative_error, RELATIVE_ERROR_FLOOR};
pub use gru::{gru_step, BoundGru, GruCell, GruDims, GRU_PARAM_NAMES};
pub use tape::{cross_entropy, softmax, Gradients, NodeId, Tape, CROSS_ENTROPY_EPS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuroError {
    #[error("shape mismatch in {op}: {}x{} vs {}x{}", .left.0, .left.1, .right.0, .right.1)]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{len} values cannot fill a {rows}x{cols} array")]
    DataLength { rows: usize, cols: usize, len: usize },
    #[error("{op}: index {index} out of range for length {len}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("{0} needs at least one operand")]
    Empty(&'static str),
    #[error("softmax: every entry is masked")]
    AllMasked,
    #[error("loss must be 1x1, got {0}x{1}")]
    NonScalarLoss(usize, usize),
}

impl NeuroError {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        NeuroError::Shape { op, left, right }
    }
}
