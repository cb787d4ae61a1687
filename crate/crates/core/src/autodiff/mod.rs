//! Reverse-mode differentiation over dense `f64` matrices, parameter storage,
//! checkpoints and the Adam optimizer.

mod check;
mod optim;
mod params;
mod tape;
#[cfg(test)]
mod tests;

pub use check::{grad_check, sample_coords};
pub use optim::{Adam, ExponentialSchedule};
pub use params::{
    glorot, Checkpoint, NamedTensor, ParamId, ParamStore, CHECKPOINT_FORMAT_VERSION,
};
pub use tape::{Gradients, Tape, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("{op}: non-finite value")]
    NonFinite { op: &'static str },
    #[error("{op}: index {index} out of range for {len} rows")]
    Index {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("loss must be 1x1, got {shape:?}")]
    NotScalar { shape: (usize, usize) },
    #[error("class index {index} out of range for {classes} classes")]
    InvalidTarget { index: usize, classes: usize },
    #[error("invalid schedule lr0={lr0} decay={decay}")]
    InvalidSchedule { lr0: f64, decay: f64 },
    #[error("checkpoint format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
