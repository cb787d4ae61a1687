//! Fingerprint-difference reaction representation and a feed-forward
//! classifier on top of it.

mod morgan;

pub use morgan::{
    morgan_environments, morgan_fingerprint, morgan_identifiers, stable_hash, Environment,
    Fingerprint,
};

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::chem::{MolecularGraph, Reaction};
use crate::gnn::ModelError;
use crate::train::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintConfig {
    pub radius: usize,
    pub bits: usize,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        FingerprintConfig {
            radius: 2,
            bits: 2048,
        }
    }
}

fn sum_fp<'a>(mols: impl Iterator<Item = &'a MolecularGraph>, cfg: &FingerprintConfig) -> Array1<f64> {
    let mut acc = Array1::zeros(cfg.bits);
    for m in mols {
        let fp = morgan_fingerprint(m, cfg.radius, cfg.bits);
        for (a, &c) in acc.iter_mut().zip(&fp.counts) {
            *a += f64::from(c);
        }
    }
    acc
}

/// The two sums the weighted representation is built from:
/// `ΣFP(products) − ΣFP(non-agent reactants)` and `ΣFP(agents)`.
pub fn reaction_fp_parts(
    rxn: &Reaction,
    agents: &[bool],
    cfg: &FingerprintConfig,
) -> (Array1<f64>, Array1<f64>) {
    assert_eq!(agents.len(), rxn.reactants.len(), "one agent flag per reactant");
    let reactants = rxn
        .reactants
        .iter()
        .zip(agents)
        .filter(|(_, &a)| !a)
        .map(|(m, _)| m);
    let agent_mols = rxn
        .reactants
        .iter()
        .zip(agents)
        .filter(|(_, &a)| a)
        .map(|(m, _)| m);
    let diff = sum_fp(rxn.products.iter(), cfg) - sum_fp(reactants, cfg);
    (diff, sum_fp(agent_mols, cfg))
}

/// `w1 (ΣFP(P) − ΣFP(R)) + w2 ΣFP(A)` with the agents tagged at parse time.
pub fn reaction_fp(rxn: &Reaction, w1: f64, w2: f64, cfg: &FingerprintConfig) -> Array1<f64> {
    reaction_fp_with_agents(rxn, &rxn.agents, w1, w2, cfg)
}

/// As [`reaction_fp`] with an explicit agent subset of the reactants.
pub fn reaction_fp_with_agents(
    rxn: &Reaction,
    agents: &[bool],
    w1: f64,
    w2: f64,
    cfg: &FingerprintConfig,
) -> Array1<f64> {
    let (diff, agent) = reaction_fp_parts(rxn, agents, cfg);
    diff * w1 + agent * w2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintModelConfig {
    pub fingerprint: FingerprintConfig,
    pub head_dims: Vec<usize>,
    pub classes: usize,
}

/// Trainable `w1`, `w2` and a ReLU feed-forward head.
#[derive(Debug, Clone)]
pub struct FingerprintModel {
    pub config: FingerprintModelConfig,
    pub w1: ParamId,
    pub w2: ParamId,
    pub layers: Vec<(ParamId, ParamId)>,
}

/// Precomputed fingerprint sums, one row per reaction.
#[derive(Debug, Clone)]
pub struct FingerprintInputs {
    pub diff: Array2<f64>,
    pub agents: Array2<f64>,
}

impl FingerprintInputs {
    pub fn new(reactions: &[&Reaction], cfg: &FingerprintConfig) -> Self {
        let mut diff = Array2::zeros((reactions.len(), cfg.bits));
        let mut agents = Array2::zeros((reactions.len(), cfg.bits));
        for (i, rxn) in reactions.iter().enumerate() {
            let (d, a) = reaction_fp_parts(rxn, &rxn.agents, cfg);
            diff.row_mut(i).assign(&d);
            agents.row_mut(i).assign(&a);
        }
        FingerprintInputs { diff, agents }
    }

    pub fn len(&self) -> usize {
        self.diff.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.diff.nrows() == 0
    }

    pub fn select(&self, rows: &[usize]) -> FingerprintInputs {
        FingerprintInputs {
            diff: self.diff.select(ndarray::Axis(0), rows),
            agents: self.agents.select(ndarray::Axis(0), rows),
        }
    }
}

impl FingerprintModel {
    pub fn new<R: Rng + ?Sized>(
        config: FingerprintModelConfig,
        store: &mut ParamStore,
        prefix: &str,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        if config.classes < 2 {
            return Err(ModelError::Config("classification needs at least 2 classes".into()));
        }
        if config.fingerprint.bits == 0 || config.head_dims.contains(&0) {
            return Err(ModelError::Config("layer sizes must be positive".into()));
        }
        let w1 = store.add(format!("{prefix}fp.w1"), Array2::ones((1, 1)));
        let w2 = store.add(format!("{prefix}fp.w2"), Array2::ones((1, 1)));
        let mut layers = Vec::new();
        let mut width = config.fingerprint.bits;
        let dims: Vec<usize> = config
            .head_dims
            .iter()
            .copied()
            .chain(std::iter::once(config.classes))
            .collect();
        for (i, &d) in dims.iter().enumerate() {
            let w = store.add_glorot(format!("{prefix}fp.head{i}.w"), width, d, rng);
            let b = store.add_zeros(format!("{prefix}fp.head{i}.b"), 1, d);
            layers.push((w, b));
            width = d;
        }
        Ok(FingerprintModel {
            config,
            w1,
            w2,
            layers,
        })
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        inputs: &FingerprintInputs,
    ) -> Result<Var, ModelError> {
        let d = tape.leaf(inputs.diff.clone())?;
        let a = tape.leaf(inputs.agents.clone())?;
        let w1 = tape.param(store, self.w1);
        let w2 = tape.param(store, self.w2);
        let d = tape.scale_by(d, w1)?;
        let a = tape.scale_by(a, w2)?;
        let mut y = tape.add(d, a)?;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            let wv = tape.param(store, w);
            let bv = tape.param(store, b);
            y = tape.matmul(y, wv)?;
            y = tape.add_row(y, bv)?;
            if i + 1 < self.layers.len() {
                y = tape.relu(y)?;
            }
        }
        Ok(y)
    }

    pub fn predict(&self, store: &ParamStore, inputs: &FingerprintInputs) -> Result<Array2<f64>, ModelError> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, store, inputs)?;
        Ok(tape.value(out).clone())
    }
}

pub struct FingerprintObjective<'a> {
    pub model: &'a FingerprintModel,
    pub inputs: &'a FingerprintInputs,
    pub labels: &'a [usize],
}

impl Objective for FingerprintObjective<'_> {
    fn example_count(&self) -> usize {
        self.labels.len()
    }

    fn loss(&self, tape: &mut Tape, store: &ParamStore, batch: &[usize]) -> Result<Var, ModelError> {
        let logits = self.model.forward(tape, store, &self.inputs.select(batch))?;
        let labels: Vec<usize> = batch.iter().map(|&i| self.labels[i]).collect();
        Ok(tape.softmax_cross_entropy(logits, &labels)?)
    }
}
