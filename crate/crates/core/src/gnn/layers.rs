use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::batch::GraphBatch;
use super::ModelError;
use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::hypergraph::Relation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Rgcn,
    Rgat,
}

/// Parameter handles of one relational layer. With shared weights every
/// entry of `w_rel` and `w_self` is the same parameter.
#[derive(Debug, Clone)]
pub struct LayerParams {
    pub kind: LayerKind,
    pub in_dim: usize,
    pub out_dim: usize,
    pub heads: usize,
    pub w_self: ParamId,
    pub w_rel: Vec<ParamId>,
    /// Destination and source halves of each relation's attention vector,
    /// stored as `out_dim × heads` matrices. Empty for RGCN.
    pub att_dst: Vec<ParamId>,
    pub att_src: Vec<ParamId>,
}

impl LayerParams {
    #[allow(clippy::too_many_arguments)]
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        kind: LayerKind,
        in_dim: usize,
        out_dim: usize,
        heads: usize,
        share_weights: bool,
        rng: &mut R,
    ) -> Self {
        let (w_self, w_rel) = if share_weights {
            let w = store.add_glorot(format!("{prefix}.w"), in_dim, out_dim, rng);
            (w, vec![w; Relation::COUNT])
        } else {
            let w_self = store.add_glorot(format!("{prefix}.w_self"), in_dim, out_dim, rng);
            let w_rel = Relation::ALL
                .iter()
                .map(|r| store.add_glorot(format!("{prefix}.w.{}", r.name()), in_dim, out_dim, rng))
                .collect();
            (w_self, w_rel)
        };
        let (mut att_dst, mut att_src) = (Vec::new(), Vec::new());
        if kind == LayerKind::Rgat {
            for r in Relation::ALL {
                att_dst.push(store.add_glorot(format!("{prefix}.att_dst.{}", r.name()), out_dim, heads, rng));
                att_src.push(store.add_glorot(format!("{prefix}.att_src.{}", r.name()), out_dim, heads, rng));
            }
        }
        LayerParams {
            kind,
            in_dim,
            out_dim,
            heads,
            w_self,
            w_rel,
            att_dst,
            att_src,
        }
    }
}

/// Attention weights of one relation in one layer, averaged over heads.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationAttention {
    /// (src, dst) batch node pairs, sorted by (dst, src).
    pub edges: Vec<(usize, usize)>,
    pub alpha: Vec<f64>,
    /// (node, self weight inside this relation's softmax).
    pub self_alpha: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerAttention {
    /// Indexed by [`Relation::index`].
    pub relations: Vec<RelationAttention>,
    /// Final self weight per batch node.
    pub self_alpha: Vec<f64>,
}

struct ParamCache<'a> {
    store: &'a ParamStore,
    vars: HashMap<ParamId, Var>,
}

impl ParamCache<'_> {
    fn get(&mut self, tape: &mut Tape, id: ParamId) -> Var {
        *self
            .vars
            .entry(id)
            .or_insert_with(|| tape.param(self.store, id))
    }
}

fn check_input(tape: &Tape, p: &LayerParams, h: Var, batch: &GraphBatch) -> Result<(), ModelError> {
    let (rows, cols) = tape.value(h).dim();
    if rows != batch.node_count {
        return Err(ModelError::Dimension {
            what: "layer input rows",
            expected: batch.node_count,
            got: rows,
        });
    }
    if cols != p.in_dim {
        return Err(ModelError::Dimension {
            what: "layer input width",
            expected: p.in_dim,
            got: cols,
        });
    }
    Ok(())
}

/// `h'_i = W_self h_i + Σ_s mean_{j ∈ N_s(i)} W_s h_j`, with row-vector
/// convention (`h W`). Empty neighbourhoods contribute nothing.
pub fn rgcn_layer(
    tape: &mut Tape,
    store: &ParamStore,
    p: &LayerParams,
    h: Var,
    batch: &GraphBatch,
) -> Result<Var, ModelError> {
    check_input(tape, p, h, batch)?;
    let mut cache = ParamCache {
        store,
        vars: HashMap::new(),
    };
    let w_self = cache.get(tape, p.w_self);
    let mut out = tape.matmul(h, w_self)?;
    for r in Relation::ALL {
        let idx = &batch.relations[r.index()];
        if idx.is_empty() {
            continue;
        }
        let w = cache.get(tape, p.w_rel[r.index()]);
        let hs = tape.gather_rows(h, &idx.involved)?;
        let zs = tape.matmul(hs, w)?;
        let msg = tape.gather_rows(zs, &idx.src_local)?;
        let agg = tape.segment_mean(msg, &idx.dst, batch.node_count)?;
        out = tape.add(out, agg)?;
    }
    Ok(out)
}

fn head_mask(dim: usize, heads: usize) -> Array2<f64> {
    let block = dim / heads;
    Array2::from_shape_fn((dim, heads), |(d, h)| if d / block == h { 1.0 } else { 0.0 })
}

/// Relational attention layer. For each relation the softmax runs over the
/// in-neighbours plus the node itself; the self weight that multiplies
/// `W_self h_i` is the mean of those per-relation self weights (1 for nodes
/// without in-edges). The self logit uses `W_self h_i` on both sides of the
/// attention vector averaged over all relations.
pub fn rgat_layer(
    tape: &mut Tape,
    store: &ParamStore,
    p: &LayerParams,
    h: Var,
    batch: &GraphBatch,
    slope: f64,
    record: Option<&mut Vec<LayerAttention>>,
) -> Result<Var, ModelError> {
    check_input(tape, p, h, batch)?;
    if p.att_dst.len() != Relation::COUNT {
        return Err(ModelError::Config("attention layer without attention parameters".into()));
    }
    let n = batch.node_count;
    let heads = p.heads;
    let mut cache = ParamCache {
        store,
        vars: HashMap::new(),
    };
    let mask = if heads > 1 {
        Some(tape.leaf(head_mask(p.out_dim, heads))?)
    } else {
        None
    };
    let mut att = |tape: &mut Tape, id: ParamId| -> Result<Var, ModelError> {
        let a = cache.get(tape, id);
        Ok(match mask {
            Some(m) => tape.mul(a, m)?,
            None => a,
        })
    };
    let mut att_dst = Vec::with_capacity(Relation::COUNT);
    let mut att_src = Vec::with_capacity(Relation::COUNT);
    for r in 0..Relation::COUNT {
        att_dst.push(att(tape, p.att_dst[r])?);
        att_src.push(att(tape, p.att_src[r])?);
    }
    let mut a_sum = tape.add(att_dst[0], att_src[0])?;
    for r in 1..Relation::COUNT {
        a_sum = tape.add(a_sum, att_dst[r])?;
        a_sum = tape.add(a_sum, att_src[r])?;
    }
    let a_self = tape.scale(a_sum, 1.0 / Relation::COUNT as f64)?;

    let w_self = cache.get(tape, p.w_self);
    let z_self = tape.matmul(h, w_self)?;
    let self_raw = tape.matmul(z_self, a_self)?;
    let self_logit = tape.leaky_relu(self_raw, slope)?;

    let mut agg: Option<Var> = None;
    let mut self_acc: Option<Var> = None;
    let mut recorded = LayerAttention {
        relations: vec![RelationAttention::default(); Relation::COUNT],
        self_alpha: Vec::new(),
    };
    for r in Relation::ALL {
        let idx = &batch.relations[r.index()];
        if idx.is_empty() {
            continue;
        }
        let ri = r.index();
        let w = cache.get(tape, p.w_rel[ri]);
        let hs = tape.gather_rows(h, &idx.involved)?;
        let zs = tape.matmul(hs, w)?;
        let q = tape.matmul(zs, att_dst[ri])?;
        let k = tape.matmul(zs, att_src[ri])?;
        let qe = tape.gather_rows(q, &idx.dst_local)?;
        let ke = tape.gather_rows(k, &idx.src_local)?;
        let raw = tape.add(qe, ke)?;
        let edge_logit = tape.leaky_relu(raw, slope)?;
        let own_logit = tape.gather_rows(self_logit, &idx.targets)?;
        let logits = tape.concat_rows(&[edge_logit, own_logit])?;
        let e = idx.src.len();
        let t = idx.targets.len();
        let mut groups = idx.edge_group.clone();
        groups.extend(0..t);
        let alpha = tape.segment_softmax(logits, &groups, t)?;
        let alpha_edges = tape.gather_rows(alpha, &(0..e).collect::<Vec<_>>())?;
        let alpha_self = tape.gather_rows(alpha, &(e..e + t).collect::<Vec<_>>())?;

        let msg = tape.gather_rows(zs, &idx.src_local)?;
        let weighted = tape.scale_rows(msg, alpha_edges)?;
        let summed = tape.segment_sum(weighted, &idx.dst, n)?;
        agg = Some(match agg {
            Some(a) => tape.add(a, summed)?,
            None => summed,
        });
        let scattered = tape.segment_sum(alpha_self, &idx.targets, n)?;
        self_acc = Some(match self_acc {
            Some(a) => tape.add(a, scattered)?,
            None => scattered,
        });

        if record.is_some() {
            let head_mean = |v: &Array2<f64>, row: usize| v.row(row).sum() / heads as f64;
            let av = tape.value(alpha_edges);
            let sv = tape.value(alpha_self);
            recorded.relations[ri] = RelationAttention {
                edges: idx.src.iter().copied().zip(idx.dst.iter().copied()).collect(),
                alpha: (0..e).map(|i| head_mean(av, i)).collect(),
                self_alpha: idx
                    .targets
                    .iter()
                    .enumerate()
                    .map(|(i, &node)| (node, head_mean(sv, i)))
                    .collect(),
            };
        }
    }

    let absent = Array2::from_shape_fn((n, heads), |(i, _)| {
        if batch.relations_present[i] == 0 {
            1.0
        } else {
            0.0
        }
    });
    let inv_count = Array2::from_shape_fn((n, heads), |(i, _)| {
        1.0 / batch.relations_present[i].max(1) as f64
    });
    let absent = tape.leaf(absent)?;
    let inv_count = tape.leaf(inv_count)?;
    let self_sum = match self_acc {
        Some(s) => tape.add(s, absent)?,
        None => absent,
    };
    let self_alpha = tape.mul(self_sum, inv_count)?;
    let own = tape.scale_rows(z_self, self_alpha)?;
    let out = match agg {
        Some(a) => tape.add(own, a)?,
        None => own,
    };

    if let Some(rec) = record {
        let sv = tape.value(self_alpha);
        recorded.self_alpha = (0..n).map(|i| sv.row(i).sum() / heads as f64).collect();
        rec.push(recorded);
    }
    Ok(out)
}
