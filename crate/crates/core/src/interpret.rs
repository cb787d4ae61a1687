//! Attention-derived importance scores for a single reaction.
//!
//! Direction convention: `α(u→v)` is the weight node `v` gives to the
//! message from `u` in the softmax over `v`'s neighbourhood for that
//! relation. So `α(a→m)` is how much mol-hypernode `m` listens to atom `a`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamStore, Tape};
use crate::chem::Reaction;
use crate::gnn::{GnnModel, GraphBatch, LayerAttention, LayerKind, ModelError};
use crate::hypergraph::{NodeKind, Relation, RxnHypergraph, Side};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpretError {
    #[error("{0:?} layers have no attention weights to interpret")]
    UnsupportedModel(LayerKind),
    #[error("no attention recorded for {relation:?} edge {src} -> {dst}")]
    MissingAttention {
        relation: Relation,
        src: usize,
        dst: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which layers feed the path-product scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathLayers {
    /// Products of last-layer weights.
    #[default]
    Final,
    /// Per-layer products, averaged over layers.
    Averaged,
}

/// Head-averaged attention of every layer, keyed by graph node ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttentionRecord {
    /// `layers[l][relation][(src, dst)]`.
    pub layers: Vec<Vec<BTreeMap<(usize, usize), f64>>>,
    /// `self_weights[l][relation][node]`: weight of the node's own term in
    /// that relation's softmax.
    pub self_weights: Vec<Vec<BTreeMap<usize, f64>>>,
}

impl AttentionRecord {
    /// Converts per-layer recordings of a one-graph batch.
    pub fn from_layers(layers: &[LayerAttention]) -> Self {
        let mut rec = AttentionRecord::default();
        for layer in layers {
            let mut edges = vec![BTreeMap::new(); Relation::COUNT];
            let mut own = vec![BTreeMap::new(); Relation::COUNT];
            for (r, ra) in layer.relations.iter().enumerate() {
                edges[r] = ra.edges.iter().copied().zip(ra.alpha.iter().copied()).collect();
                own[r] = ra.self_alpha.iter().copied().collect();
            }
            rec.layers.push(edges);
            rec.self_weights.push(own);
        }
        rec
    }

    /// Runs `model` on one reaction graph and records its attention.
    pub fn capture(
        model: &GnnModel,
        store: &ParamStore,
        graph: &crate::gnn::PreparedGraph,
    ) -> Result<Self, InterpretError> {
        if model.config.layer_kind != LayerKind::Rgat {
            return Err(InterpretError::UnsupportedModel(model.config.layer_kind));
        }
        let batch = GraphBatch::new(&[graph])?;
        let mut tape = Tape::new();
        let pass = model.forward(&mut tape, store, &batch, true)?;
        Ok(AttentionRecord::from_layers(&pass.attention))
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn alpha(&self, layer: usize, relation: Relation, src: usize, dst: usize) -> Result<f64, InterpretError> {
        self.layers
            .get(layer)
            .and_then(|l| l[relation.index()].get(&(src, dst)))
            .copied()
            .ok_or(InterpretError::MissingAttention { relation, src, dst })
    }

    /// Largest deviation from 1 of any neighbourhood's weight total, own
    /// term included.
    pub fn normalization_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (edges, own) in self.layers.iter().zip(&self.self_weights) {
            for r in 0..Relation::COUNT {
                let mut totals: HashMap<usize, f64> = own[r].clone().into_iter().collect();
                for (&(_, dst), &a) in &edges[r] {
                    *totals.entry(dst).or_default() += a;
                }
                for t in totals.values() {
                    worst = worst.max((t - 1.0).abs());
                }
            }
        }
        worst
    }

    fn require_layers(&self) -> Result<usize, InterpretError> {
        match self.layers.len() {
            0 => Err(InterpretError::UnsupportedModel(LayerKind::Rgcn)),
            n => Ok(n),
        }
    }

    /// Product of `α` along `path` in `layer`.
    fn path(&self, layer: usize, path: &[(Relation, usize, usize)]) -> Result<f64, InterpretError> {
        path.iter()
            .map(|&(r, s, d)| self.alpha(layer, r, s, d))
            .product()
    }

    fn path_score(&self, mode: PathLayers, path: &[(Relation, usize, usize)]) -> Result<f64, InterpretError> {
        let n = self.require_layers()?;
        match mode {
            PathLayers::Final => self.path(n - 1, path),
            PathLayers::Averaged => {
                let mut total = 0.0;
                for l in 0..n {
                    total += self.path(l, path)?;
                }
                Ok(total / n as f64)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScore {
    pub node: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeScore {
    pub src: usize,
    pub dst: usize,
    pub relation: Relation,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub a: usize,
    pub b: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolScore {
    /// Mol-hypernode id.
    pub mol: usize,
    pub side: Side,
    /// Position of the molecule within its side.
    pub index: usize,
    pub score: f64,
}

/// `α(a→m) · α(m→x)` for every atom `a`, its molecule `m` and that side's
/// rxn-hypernode `x`.
pub fn atom_rxn_scores(
    rec: &AttentionRecord,
    g: &RxnHypergraph,
    mode: PathLayers,
) -> Result<Vec<NodeScore>, InterpretError> {
    rec.require_layers()?;
    let mut out = Vec::with_capacity(g.total_atoms());
    for (node, kind) in g.nodes().iter().enumerate() {
        if let NodeKind::Atom { side, mol, .. } = *kind {
            let m = g.mol_node(side, mol);
            let x = g.rxn_node(side);
            let score = rec.path_score(
                mode,
                &[(Relation::AtomMol, node, m), (Relation::MolRxn, m, x)],
            )?;
            out.push(NodeScore { node, score });
        }
    }
    Ok(out)
}

/// Layer-averaged `α` of every edge of the graph, in edge order.
pub fn node_node_scores(rec: &AttentionRecord, g: &RxnHypergraph) -> Result<Vec<EdgeScore>, InterpretError> {
    let n = rec.require_layers()?;
    g.edges()
        .iter()
        .map(|e| {
            let mut total = 0.0;
            for l in 0..n {
                total += rec.alpha(l, e.relation, e.src, e.dst)?;
            }
            Ok(EdgeScore {
                src: e.src,
                dst: e.dst,
                relation: e.relation,
                score: total / n as f64,
            })
        })
        .collect()
}

/// Layer-averaged `α(m→x)` of every molecule.
pub fn mol_importance(rec: &AttentionRecord, g: &RxnHypergraph) -> Result<Vec<MolScore>, InterpretError> {
    let n = rec.require_layers()?;
    let mut out = Vec::new();
    for side in [Side::Reactant, Side::Product] {
        let x = g.rxn_node(side);
        for index in 0..g.molecule_sizes(side).len() {
            let m = g.mol_node(side, index);
            let mut total = 0.0;
            for l in 0..n {
                total += rec.alpha(l, Relation::MolRxn, m, x)?;
            }
            out.push(MolScore {
                mol: m,
                side,
                index,
                score: total / n as f64,
            });
        }
    }
    Ok(out)
}

/// `α(a_u→m_i) · α(m_i→m_j) · α(m_j→a_v)` for atoms of distinct molecules
/// on the same side. Sorted by score, highest first (ties by node ids);
/// with `top_k` only that many pairs are kept per side.
pub fn atom_atom_scores(
    rec: &AttentionRecord,
    g: &RxnHypergraph,
    top_k: Option<usize>,
    mode: PathLayers,
) -> Result<Vec<PairScore>, InterpretError> {
    rec.require_layers()?;
    let mut out = Vec::new();
    for side in [Side::Reactant, Side::Product] {
        let sizes = g.molecule_sizes(side);
        let mut pairs = Vec::new();
        for i in 0..sizes.len() {
            for j in 0..sizes.len() {
                if i == j {
                    continue;
                }
                let (mi, mj) = (g.mol_node(side, i), g.mol_node(side, j));
                for u in 0..sizes[i] {
                    let a = g.atom_node(side, i, u);
                    for v in 0..sizes[j] {
                        let b = g.atom_node(side, j, v);
                        let score = rec.path_score(
                            mode,
                            &[
                                (Relation::AtomMol, a, mi),
                                (Relation::MolMol, mi, mj),
                                (Relation::MolAtom, mj, b),
                            ],
                        )?;
                        pairs.push(PairScore { a, b, score });
                    }
                }
            }
        }
        pairs.sort_by(|x, y| y.score.total_cmp(&x.score).then((x.a, x.b).cmp(&(y.a, y.b))));
        if let Some(k) = top_k {
            pairs.truncate(k);
        }
        out.extend(pairs);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExplainOptions {
    pub path_layers: PathLayers,
    /// Intermolecular pairs kept per side; `None` keeps all.
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretReport {
    pub format_version: u32,
    pub reaction: String,
    pub path_layers: PathLayers,
    pub atom_rxn: Vec<NodeScore>,
    pub node_node: Vec<EdgeScore>,
    pub atom_atom: Vec<PairScore>,
    pub mol_importance: Vec<MolScore>,
}

impl InterpretReport {
    /// Every score in the report.
    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.atom_rxn
            .iter()
            .map(|s| s.score)
            .chain(self.node_node.iter().map(|s| s.score))
            .chain(self.atom_atom.iter().map(|s| s.score))
            .chain(self.mol_importance.iter().map(|s| s.score))
    }
}

pub fn report(
    rec: &AttentionRecord,
    g: &RxnHypergraph,
    reaction: &str,
    opts: &ExplainOptions,
) -> Result<InterpretReport, InterpretError> {
    Ok(InterpretReport {
        format_version: REPORT_FORMAT_VERSION,
        reaction: reaction.to_string(),
        path_layers: opts.path_layers,
        atom_rxn: atom_rxn_scores(rec, g, opts.path_layers)?,
        node_node: node_node_scores(rec, g)?,
        atom_atom: atom_atom_scores(rec, g, opts.top_k, opts.path_layers)?,
        mol_importance: mol_importance(rec, g)?,
    })
}

/// Runs the model on `rxn` and scores it.
pub fn explain(
    model: &GnnModel,
    store: &ParamStore,
    rxn: &Reaction,
    opts: &ExplainOptions,
) -> Result<InterpretReport, InterpretError> {
    if model.config.layer_kind != LayerKind::Rgat {
        return Err(InterpretError::UnsupportedModel(model.config.layer_kind));
    }
    let graph = model.prepare(rxn)?;
    let rec = AttentionRecord::capture(model, store, &graph)?;
    report(&rec, &graph.graph, &rxn.source_text, opts)
}
