//! Dense `f64` tensors, a reverse-mode tape with the layer primitives the
//! network needs, and the Adam optimizer.

mod graph;
mod kernels;
mod params;
mod tensor;

pub use graph::{Gradients, Graph, Padding, Var};
pub use params::{AdamConfig, AdamState, ParamStore};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("{op}: dimension mismatch on {axis}: expected {expected}, found {found}")]
    Dimension {
        op: &'static str,
        axis: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{op}: {what} must have rank {expected}, found rank {found}")]
    Rank {
        op: &'static str,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid tensor shape {shape:?}: extents must be positive")]
    InvalidShape { shape: Vec<usize> },
    #[error("shape {shape:?} needs {expected} values, got {found}")]
    LengthMismatch {
        shape: Vec<usize>,
        expected: usize,
        found: usize,
    },
    #[error("{op}: non-finite value at flat index {index}")]
    NonFinite { op: &'static str, index: usize },
    #[error("usage error: {0}")]
    Usage(String),
}

impl NumError {
    pub(crate) fn dim(op: &'static str, axis: &'static str, expected: usize, found: usize) -> Self {
        Self::Dimension {
            op,
            axis,
            expected,
            found,
        }
    }

    pub(crate) fn rank(op: &'static str, what: &'static str, expected: usize, found: usize) -> Self {
        Self::Rank {
            op,
            what,
            expected,
            found,
        }
    }
}
