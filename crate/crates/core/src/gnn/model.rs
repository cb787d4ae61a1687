use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::batch::{GraphBatch, PreparedGraph};
use super::layers::{rgat_layer, rgcn_layer, LayerAttention, LayerKind, LayerParams};
use super::ModelError;
use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::hypergraph::FeatureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    Subtract,
    Concat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Task {
    Classify { classes: usize },
    Regress,
    Embed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layer_kind: LayerKind,
    pub layers: usize,
    pub dim: usize,
    #[serde(default = "one")]
    pub heads: usize,
    pub readout: Readout,
    #[serde(default)]
    pub head_dims: Vec<usize>,
    pub task: Task,
    #[serde(default)]
    pub share_relation_weights: bool,
    #[serde(default = "default_slope")]
    pub leaky_slope: f64,
    #[serde(default)]
    pub features: FeatureConfig,
}

fn one() -> usize {
    1
}

fn default_slope() -> f64 {
    0.2
}

impl ModelConfig {
    pub fn new(layer_kind: LayerKind, layers: usize, dim: usize, task: Task) -> Self {
        ModelConfig {
            layer_kind,
            layers,
            dim,
            heads: 1,
            readout: Readout::Concat,
            head_dims: Vec::new(),
            task,
            share_relation_weights: false,
            leaky_slope: 0.2,
            features: FeatureConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers < 3 {
            return Err(ModelError::Config(format!(
                "at least 3 layers are required, got {}",
                self.layers
            )));
        }
        if self.dim == 0 {
            return Err(ModelError::Config("dim must be positive".into()));
        }
        if self.heads == 0 || self.dim % self.heads != 0 {
            return Err(ModelError::Config(format!(
                "dim {} is not divisible by {} heads",
                self.dim, self.heads
            )));
        }
        if let Task::Classify { classes } = self.task {
            if classes < 2 {
                return Err(ModelError::Config("classification needs at least 2 classes".into()));
            }
        }
        if self.head_dims.contains(&0) {
            return Err(ModelError::Config("head layer sizes must be positive".into()));
        }
        self.features.validate()?;
        Ok(())
    }

    /// Width of the readout vector X.
    pub fn latent_dim(&self) -> usize {
        match self.readout {
            Readout::Subtract => self.dim,
            Readout::Concat => 2 * self.dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self.task {
            Task::Classify { classes } => classes,
            Task::Regress => 1,
            Task::Embed => self.latent_dim(),
        }
    }
}

/// Parameter handles of a hypergraph model; the values live in a
/// [`ParamStore`] so other heads can share the store.
#[derive(Debug, Clone)]
pub struct GnnModel {
    pub config: ModelConfig,
    pub layers: Vec<LayerParams>,
    /// Hidden head layers then the output layer, as (weight, bias).
    pub head: Vec<(ParamId, ParamId)>,
}

pub struct ForwardPass {
    /// One row of X per graph.
    pub latent: Var,
    /// Logits, regression values or X again for embeddings.
    pub output: Var,
    pub attention: Vec<LayerAttention>,
}

impl GnnModel {
    pub fn new<R: Rng + ?Sized>(
        config: ModelConfig,
        store: &mut ParamStore,
        prefix: &str,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let mut layers = Vec::with_capacity(config.layers);
        let mut in_dim = config.features.dim();
        for l in 0..config.layers {
            layers.push(LayerParams::register(
                store,
                &format!("{prefix}layer{l}"),
                config.layer_kind,
                in_dim,
                config.dim,
                config.heads,
                config.share_relation_weights,
                rng,
            ));
            in_dim = config.dim;
        }
        let mut head = Vec::new();
        if config.task != Task::Embed {
            let mut width = config.latent_dim();
            for (i, &d) in config.head_dims.iter().enumerate() {
                let w = store.add_glorot(format!("{prefix}head{i}.w"), width, d, rng);
                let b = store.add_zeros(format!("{prefix}head{i}.b"), 1, d);
                head.push((w, b));
                width = d;
            }
            let out = config.output_dim();
            let w = store.add_glorot(format!("{prefix}out.w"), width, out, rng);
            let b = store.add_zeros(format!("{prefix}out.b"), 1, out);
            head.push((w, b));
        }
        Ok(GnnModel {
            config,
            layers,
            head,
        })
    }

    pub fn prepare(&self, rxn: &crate::chem::Reaction) -> Result<PreparedGraph, ModelError> {
        PreparedGraph::new(rxn, &self.config.features)
    }

    /// Final-layer node states.
    pub fn encode(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &GraphBatch,
        mut record: Option<&mut Vec<LayerAttention>>,
    ) -> Result<Var, ModelError> {
        let width = batch.features.ncols();
        if width != self.config.features.dim() {
            return Err(ModelError::Dimension {
                what: "input features",
                expected: self.config.features.dim(),
                got: width,
            });
        }
        let mut h = tape.leaf(batch.features.clone())?;
        for (l, layer) in self.layers.iter().enumerate() {
            h = match layer.kind {
                LayerKind::Rgcn => rgcn_layer(tape, store, layer, h, batch)?,
                LayerKind::Rgat => rgat_layer(
                    tape,
                    store,
                    layer,
                    h,
                    batch,
                    self.config.leaky_slope,
                    record.as_deref_mut(),
                )?,
            };
            if l + 1 < self.layers.len() {
                h = tape.relu(h)?;
            }
        }
        Ok(h)
    }

    pub fn readout(&self, tape: &mut Tape, h: Var, batch: &GraphBatch) -> Result<Var, ModelError> {
        let xr = tape.gather_rows(h, &batch.rxn_reactant)?;
        let xp = tape.gather_rows(h, &batch.rxn_product)?;
        Ok(match self.config.readout {
            Readout::Subtract => tape.sub(xr, xp)?,
            Readout::Concat => tape.concat_cols(&[xr, xp])?,
        })
    }

    pub fn head(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var, ModelError> {
        let mut y = x;
        for (i, &(w, b)) in self.head.iter().enumerate() {
            let wv = tape.param(store, w);
            let bv = tape.param(store, b);
            y = tape.matmul(y, wv)?;
            y = tape.add_row(y, bv)?;
            if i + 1 < self.head.len() {
                y = tape.relu(y)?;
            }
        }
        Ok(y)
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &GraphBatch,
        record_attention: bool,
    ) -> Result<ForwardPass, ModelError> {
        let mut attention = Vec::new();
        let h = self.encode(
            tape,
            store,
            batch,
            record_attention.then_some(&mut attention),
        )?;
        let latent = self.readout(tape, h, batch)?;
        let output = self.head(tape, store, latent)?;
        Ok(ForwardPass {
            latent,
            output,
            attention,
        })
    }

    /// Task loss: mean cross-entropy for classification, MSE otherwise.
    pub fn loss(
        &self,
        tape: &mut Tape,
        output: Var,
        target: &Target,
    ) -> Result<Var, ModelError> {
        match (self.config.task, target) {
            (Task::Classify { .. }, Target::Classes(c)) => Ok(tape.softmax_cross_entropy(output, c)?),
            (Task::Regress | Task::Embed, Target::Values(v)) => Ok(tape.mse(output, v.clone())?),
            _ => Err(ModelError::TargetMismatch),
        }
    }

    /// Latent rows and task outputs for a list of graphs, evaluated in
    /// chunks of `batch_size`.
    pub fn predict(
        &self,
        store: &ParamStore,
        graphs: &[&PreparedGraph],
        batch_size: usize,
    ) -> Result<(Array2<f64>, Array2<f64>), ModelError> {
        let mut latents = Vec::new();
        let mut outputs = Vec::new();
        for chunk in graphs.chunks(batch_size.max(1)) {
            let batch = GraphBatch::new(chunk)?;
            let mut tape = Tape::new();
            let pass = self.forward(&mut tape, store, &batch, false)?;
            latents.push(tape.value(pass.latent).clone());
            outputs.push(tape.value(pass.output).clone());
        }
        let cat = |parts: Vec<Array2<f64>>, width: usize| {
            if parts.is_empty() {
                return Array2::zeros((0, width));
            }
            let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
            ndarray::concatenate(ndarray::Axis(0), &views).expect("equal widths")
        };
        Ok((
            cat(latents, self.config.latent_dim()),
            cat(outputs, self.config.output_dim()),
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Classes(Vec<usize>),
    Values(Array2<f64>),
}
