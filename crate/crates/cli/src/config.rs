use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use rxn_hypergraph::gnn::{LayerKind, Readout};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rgat,
    Rgcn,
    /// Fingerprint difference with a feed-forward head.
    Fingerprint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classify,
    Regress,
    /// Pairwise plausibility ranking.
    Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutKind {
    Subtract,
    Concat,
}

impl From<ReadoutKind> for Readout {
    fn from(r: ReadoutKind) -> Readout {
        match r {
            ReadoutKind::Subtract => Readout::Subtract,
            ReadoutKind::Concat => Readout::Concat,
        }
    }
}

/// Everything a training run depends on besides the data. Read from a flat
/// TOML file; any key can be overridden on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub task: TaskKind,
    /// Inferred from the labels when absent.
    pub classes: Option<usize>,
    pub layers: usize,
    pub dim: usize,
    pub heads: usize,
    pub readout: ReadoutKind,
    pub head_dims: Vec<usize>,
    pub share_relation_weights: bool,
    pub leaky_slope: f64,
    pub fp_radius: usize,
    pub fp_bits: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub l2: f64,
    pub seed: u64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    /// Class-balanced sampling instead of fractional splits.
    pub train_per_class: Option<usize>,
    pub test_per_class: Option<usize>,
    /// Stop once the mean training loss of an epoch falls below this.
    pub stop_loss: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelKind::Rgat,
            task: TaskKind::Classify,
            classes: None,
            layers: 4,
            dim: 32,
            heads: 1,
            readout: ReadoutKind::Concat,
            head_dims: Vec::new(),
            share_relation_weights: false,
            leaky_slope: 0.2,
            fp_radius: 2,
            fp_bits: 2048,
            epochs: 50,
            batch_size: 32,
            lr: 1e-3,
            lr_decay: 1.0,
            l2: 0.0,
            seed: 0,
            valid_fraction: 0.1,
            test_fraction: 0.1,
            train_per_class: None,
            test_per_class: None,
            stop_loss: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn layer_kind(&self) -> Option<LayerKind> {
        match self.model {
            ModelKind::Rgat => Some(LayerKind::Rgat),
            ModelKind::Rgcn => Some(LayerKind::Rgcn),
            ModelKind::Fingerprint => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            bail!("batch_size must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            bail!("lr must be positive, got {}", self.lr);
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            bail!("lr_decay must be in (0, 1], got {}", self.lr_decay);
        }
        if self.l2 < 0.0 {
            bail!("l2 must be non-negative");
        }
        if self.model == ModelKind::Fingerprint && self.task != TaskKind::Classify {
            bail!("the fingerprint model only supports task = \"classify\"");
        }
        if self.train_per_class.is_some() != self.test_per_class.is_some() {
            bail!("train_per_class and test_per_class go together");
        }
        Ok(())
    }
}

/// Command-line mirrors of every [`RunConfig`] key.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigOverrides {
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub task: Option<TaskKind>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub readout: Option<ReadoutKind>,
    /// Comma-separated hidden widths of the output head.
    #[arg(long, value_delimiter = ',')]
    pub head_dims: Option<Vec<usize>>,
    #[arg(long)]
    pub share_relation_weights: Option<bool>,
    #[arg(long)]
    pub leaky_slope: Option<f64>,
    #[arg(long)]
    pub fp_radius: Option<usize>,
    #[arg(long)]
    pub fp_bits: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_decay: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub valid_fraction: Option<f64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub train_per_class: Option<usize>,
    #[arg(long)]
    pub test_per_class: Option<usize>,
    #[arg(long)]
    pub stop_loss: Option<f64>,
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                })*
            };
        }
        set!(
            model, task, layers, dim, heads, readout, head_dims, share_relation_weights, leaky_slope,
            fp_radius, fp_bits, epochs, batch_size, lr, lr_decay, l2, seed, valid_fraction, test_fraction
        );
        macro_rules! set_opt {
            ($($field:ident),*) => {
                $(if self.$field.is_some() {
                    cfg.$field = self.$field;
                })*
            };
        }
        set_opt!(classes, train_per_class, test_per_class, stop_loss);
    }
}
