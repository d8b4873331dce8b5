//! Dense tensors, a reverse-mode tape, Adam and finite-difference checks.

mod adam;
mod gradcheck;
mod init;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckReport, ParamCheck};
pub use init::{glorot_uniform, zeros_like_shape};
pub use tape::{Gradients, OpKind, Segments, Tape, Var};
pub use tensor::Tensor;

pub(crate) use tape::clamp_prob;

/// Lower clamp for any probability fed to a log; the upper clamp is `1 - PROB_CLAMP`.
pub const PROB_CLAMP: f64 = 1e-12;

/// Negative-side slope of `leaky_relu`.
pub const LEAKY_RELU_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("{op}: shape mismatch between {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("shape {shape:?} does not hold {len} values")]
    BadShape { shape: Vec<usize>, len: usize },
    #[error("rows of unequal length: expected {expected}, found {found}")]
    RaggedRows { expected: usize, found: usize },
    #[error("{op}: expected {expected} inputs, got {found}")]
    Arity {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{op}: empty input")]
    Empty { op: &'static str },
    #[error("log of non-positive value {value}")]
    NonPositiveLog { value: f64 },
    #[error("row index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("backward needs a scalar output, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("tape already consumed by a backward pass")]
    TapeConsumed,
    #[error("parameter {index} has no gradient")]
    MissingGrad { index: usize },
    #[error("optimizer state does not match parameter {index}")]
    StateMismatch { index: usize },
}
