//! Building models from a run config and restoring them from checkpoints.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rxn_hypergraph::autodiff::{Checkpoint, ParamStore};
use rxn_hypergraph::baseline::{FingerprintConfig, FingerprintModel, FingerprintModelConfig};
use rxn_hypergraph::gnn::{GnnModel, ModelConfig, Task};
use rxn_hypergraph::ranker::PairwiseRanker;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, TaskKind};
use crate::io;

/// Stored as the checkpoint's hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: RunConfig,
    pub classes: Option<usize>,
}

#[derive(Debug, Clone)]
pub enum Model {
    Gnn(GnnModel),
    Fingerprint(FingerprintModel),
    Ranker(PairwiseRanker),
}

pub struct Loaded {
    pub meta: CheckpointMeta,
    pub model: Model,
    pub store: ParamStore,
}

fn gnn_config(cfg: &RunConfig, task: Task) -> Result<ModelConfig> {
    let Some(kind) = cfg.layer_kind() else {
        bail!("model {:?} is not a hypergraph model", cfg.model);
    };
    let mut mc = ModelConfig::new(kind, cfg.layers, cfg.dim, task);
    mc.heads = cfg.heads;
    mc.readout = cfg.readout.into();
    mc.head_dims = cfg.head_dims.clone();
    mc.share_relation_weights = cfg.share_relation_weights;
    mc.leaky_slope = cfg.leaky_slope;
    Ok(mc)
}

/// Fresh parameters drawn from `cfg.seed`.
pub fn build(meta: &CheckpointMeta) -> Result<(Model, ParamStore)> {
    let cfg = &meta.config;
    cfg.validate()?;
    let mut store = ParamStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = match (cfg.task, cfg.layer_kind()) {
        (TaskKind::Rank, _) => Model::Ranker(PairwiseRanker::new(
            gnn_config(cfg, Task::Embed)?,
            &mut store,
            "",
            &mut rng,
        )?),
        (TaskKind::Classify, None) => {
            let classes = meta.classes.context("fingerprint model needs a class count")?;
            Model::Fingerprint(FingerprintModel::new(
                FingerprintModelConfig {
                    fingerprint: FingerprintConfig {
                        radius: cfg.fp_radius,
                        bits: cfg.fp_bits,
                    },
                    head_dims: cfg.head_dims.clone(),
                    classes,
                },
                &mut store,
                "",
                &mut rng,
            )?)
        }
        (TaskKind::Classify, Some(_)) => {
            let classes = meta.classes.context("classification needs a class count")?;
            let mc = gnn_config(cfg, Task::Classify { classes })?;
            Model::Gnn(GnnModel::new(mc, &mut store, "", &mut rng)?)
        }
        (TaskKind::Regress, _) => {
            let mc = gnn_config(cfg, Task::Regress)?;
            Model::Gnn(GnnModel::new(mc, &mut store, "", &mut rng)?)
        }
    };
    Ok((model, store))
}

pub fn checkpoint_json(meta: &CheckpointMeta, store: &ParamStore) -> Result<String> {
    Ok(Checkpoint::new(serde_json::to_value(meta)?, store).to_json())
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = io::read_text(path)?;
    let ckpt = Checkpoint::from_json(&text).with_context(|| format!("loading {}", path.display()))?;
    let meta: CheckpointMeta =
        serde_json::from_value(ckpt.hyperparameters).context("checkpoint hyperparameters")?;
    let (model, mut store) = build(&meta)?;
    store
        .load_tensors(&ckpt.tensors)
        .with_context(|| format!("checkpoint {} does not match its config", path.display()))?;
    Ok(Loaded { meta, model, store })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelKind;

    #[test]
    fn checkpoint_round_trip() {
        let mut config = RunConfig::default();
        config.layers = 3;
        config.dim = 8;
        for (model, task) in [
            (ModelKind::Rgat, TaskKind::Classify),
            (ModelKind::Rgcn, TaskKind::Regress),
            (ModelKind::Rgat, TaskKind::Rank),
            (ModelKind::Fingerprint, TaskKind::Classify),
        ] {
            config.model = model;
            config.task = task;
            config.fp_bits = 64;
            let meta = CheckpointMeta {
                config: config.clone(),
                classes: Some(3),
            };
            let (_, store) = build(&meta).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            io::write_text(&path, &checkpoint_json(&meta, &store).unwrap()).unwrap();
            let back = load(&path).unwrap();
            assert_eq!(back.meta, meta);
            assert_eq!(back.store.to_tensors(), store.to_tensors());
        }
    }
}
