//! Command implementations behind the `rxnhg` binary.

pub mod commands;
pub mod config;
pub mod io;
pub mod model;

use rxn_hypergraph::autodiff::AutodiffError;
use rxn_hypergraph::gnn::ModelError;
use rxn_hypergraph::interpret::InterpretError;
use rxn_hypergraph::ranker::RankerError;

pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

fn model_is_numeric(e: &ModelError) -> bool {
    matches!(e, ModelError::Autodiff(AutodiffError::NonFinite { .. }))
}

/// True when training or inference produced a non-finite value.
pub fn is_numeric_failure(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        if let Some(e) = e.downcast_ref::<AutodiffError>() {
            matches!(e, AutodiffError::NonFinite { .. })
        } else if let Some(e) = e.downcast_ref::<ModelError>() {
            model_is_numeric(e)
        } else if let Some(RankerError::Model(e)) = e.downcast_ref::<RankerError>() {
            model_is_numeric(e)
        } else if let Some(InterpretError::Model(e)) = e.downcast_ref::<InterpretError>() {
            model_is_numeric(e)
        } else {
            false
        }
    })
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if is_numeric_failure(err) {
        EXIT_NUMERIC
    } else {
        EXIT_INPUT
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn non_finite_errors_map_to_numeric_exit() {
        let e: anyhow::Error = ModelError::Autodiff(AutodiffError::NonFinite { op: "matmul" }).into();
        assert_eq!(exit_code(&e.context("training")), EXIT_NUMERIC);
        let e = Err::<(), _>(RankerError::Model(ModelError::Autodiff(AutodiffError::NonFinite {
            op: "tanh",
        })))
        .context("ranking")
        .unwrap_err();
        assert_eq!(exit_code(&e), EXIT_NUMERIC);
        assert_eq!(exit_code(&anyhow::anyhow!("missing file")), EXIT_INPUT);
        let e: anyhow::Error = ModelError::EmptyBatch.into();
        assert_eq!(exit_code(&e), EXIT_INPUT);
    }
}
