//! Relational convolution and attention layers over batched hypergraphs,
//! readout and task heads.

mod batch;
mod layers;
mod model;

pub use batch::{GraphBatch, PreparedGraph, RelationIndex};
pub use layers::{
    rgat_layer, rgcn_layer, LayerAttention, LayerKind, LayerParams, RelationAttention,
};
pub use model::{ForwardPass, GnnModel, ModelConfig, Readout, Target, Task};

use crate::autodiff::AutodiffError;
use crate::hypergraph::{FeatureError, HypergraphError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("{what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("target kind does not match the model task")]
    TargetMismatch,
}
