//! Reference implementations shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::collections::VecDeque;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rxn_hypergraph::autodiff::{grad_check, ParamStore, Tape, Var};
use rxn_hypergraph::chem::parse_reaction;
use rxn_hypergraph::data::synthetic::{random_reaction, RandomReactionOptions};
use rxn_hypergraph::gnn::{
    rgat_layer, rgcn_layer, GraphBatch, LayerAttention, LayerKind, LayerParams, PreparedGraph,
};
use rxn_hypergraph::hypergraph::{FeatureConfig, Relation, RxnHypergraph};
use rxn_hypergraph::ranker::{sorted_victories, RankMatrix};

pub const SLOPE: f64 = 0.2;

pub fn small_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> PreparedGraph {
    let opts = RandomReactionOptions {
        max_molecules: 2,
        max_units: 3,
        agents: false,
    };
    loop {
        let rxn = parse_reaction(&random_reaction(&opts, rng)).unwrap();
        let g = PreparedGraph::new(&rxn, &FeatureConfig::default()).unwrap();
        if g.graph.node_count() <= max_nodes {
            return g;
        }
    }
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
}

/// `adj[s][i][j]` is 1 when there is an edge `j → i` of relation `s`.
pub fn dense_adjacency(batch: &GraphBatch) -> Vec<Array2<f64>> {
    let n = batch.node_count;
    batch
        .relations
        .iter()
        .map(|r| {
            let mut a = Array2::zeros((n, n));
            for (&s, &d) in r.src.iter().zip(&r.dst) {
                a[[d, s]] = 1.0;
            }
            a
        })
        .collect()
}

pub fn dense_rgcn(store: &ParamStore, p: &LayerParams, h: &Array2<f64>, adj: &[Array2<f64>]) -> Array2<f64> {
    let mut out = h.dot(store.get(p.w_self));
    for (s, a) in adj.iter().enumerate() {
        let z = h.dot(store.get(p.w_rel[s]));
        for i in 0..a.nrows() {
            let deg: f64 = a.row(i).sum();
            if deg == 0.0 {
                continue;
            }
            for j in 0..a.ncols() {
                if a[[i, j]] == 1.0 {
                    let m = &z.row(j) / deg;
                    let mut row = out.row_mut(i);
                    row += &m;
                }
            }
        }
    }
    out
}

pub fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        SLOPE * x
    }
}

pub fn dense_rgat(store: &ParamStore, p: &LayerParams, h: &Array2<f64>, adj: &[Array2<f64>]) -> Array2<f64> {
    let n = h.nrows();
    let dim = p.out_dim;
    let heads = p.heads;
    let block = dim / heads;
    let head_of = |d: usize| d / block;
    let att = |id| {
        let a = store.get(id);
        Array2::from_shape_fn((dim, heads), |(d, k)| if head_of(d) == k { a[[d, k]] } else { 0.0 })
    };
    let a_dst: Vec<Array2<f64>> = p.att_dst.iter().map(|&id| att(id)).collect();
    let a_src: Vec<Array2<f64>> = p.att_src.iter().map(|&id| att(id)).collect();
    let mut a_self = Array2::<f64>::zeros((dim, heads));
    for s in 0..Relation::COUNT {
        a_self = a_self + &a_dst[s] + &a_src[s];
    }
    a_self /= Relation::COUNT as f64;

    let z_self = h.dot(store.get(p.w_self));
    let mut out = Array2::zeros((n, dim));
    let mut self_weight = vec![vec![0.0; heads]; n];
    let mut present = vec![0usize; n];
    for s in 0..Relation::COUNT {
        let z = h.dot(store.get(p.w_rel[s]));
        for i in 0..n {
            let nbrs: Vec<usize> = (0..n).filter(|&j| adj[s][[i, j]] == 1.0).collect();
            if nbrs.is_empty() {
                continue;
            }
            present[i] += 1;
            for k in 0..heads {
                let dims = k * block..(k + 1) * block;
                let own: f64 = dims.clone().map(|d| z_self[[i, d]] * a_self[[d, k]]).sum();
                let own = leaky(own);
                let logits: Vec<f64> = nbrs
                    .iter()
                    .map(|&j| {
                        leaky(
                            dims.clone()
                                .map(|d| z[[i, d]] * a_dst[s][[d, k]] + z[[j, d]] * a_src[s][[d, k]])
                                .sum(),
                        )
                    })
                    .collect();
                let top = logits.iter().copied().fold(own, f64::max);
                let denom: f64 = (own - top).exp() + logits.iter().map(|l| (l - top).exp()).sum::<f64>();
                self_weight[i][k] += (own - top).exp() / denom;
                for (&j, &l) in nbrs.iter().zip(&logits) {
                    let alpha = (l - top).exp() / denom;
                    for d in dims.clone() {
                        out[[i, d]] += alpha * z[[j, d]];
                    }
                }
            }
        }
    }
    for i in 0..n {
        for d in 0..dim {
            let k = head_of(d);
            let w = if present[i] == 0 {
                1.0
            } else {
                self_weight[i][k] / present[i] as f64
            };
            out[[i, d]] += w * z_self[[i, d]];
        }
    }
    out
}

pub fn layer(kind: LayerKind, in_dim: usize, out_dim: usize, heads: usize, share: bool, rng: &mut ChaCha8Rng) -> (ParamStore, LayerParams) {
    let mut store = ParamStore::new();
    let p = LayerParams::register(&mut store, "l", kind, in_dim, out_dim, heads, share, rng);
    // Glorot attention vectors are small; widen them so the softmax is far
    // from uniform.
    for &id in p.att_dst.iter().chain(&p.att_src) {
        store.get_mut(id).mapv_inplace(|v| 4.0 * v);
    }
    (store, p)
}

pub fn run_layer(
    kind: LayerKind,
    store: &ParamStore,
    p: &LayerParams,
    h: &Array2<f64>,
    batch: &GraphBatch,
    record: Option<&mut Vec<LayerAttention>>,
) -> Array2<f64> {
    let mut tape = Tape::new();
    let x = tape.leaf(h.clone()).unwrap();
    let y = match kind {
        LayerKind::Rgcn => rgcn_layer(&mut tape, store, p, x, batch).unwrap(),
        LayerKind::Rgat => rgat_layer(&mut tape, store, p, x, batch, SLOPE, record).unwrap(),
    };
    tape.value(y).clone()
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn neighbourhood_totals(att: &LayerAttention, n: usize) -> Vec<Vec<Option<f64>>> {
    let mut totals = vec![vec![None; n]; Relation::COUNT];
    for (s, rel) in att.relations.iter().enumerate() {
        for &(node, a) in &rel.self_alpha {
            *totals[s][node].get_or_insert(0.0) += a;
        }
        for (&(_, dst), &a) in rel.edges.iter().zip(&rel.alpha) {
            *totals[s][dst].get_or_insert(0.0) += a;
        }
    }
    totals
}

/// Central-difference check of every parameter coordinate.
pub fn check_all(store: &ParamStore, loss: &dyn Fn(&ParamStore, &mut Tape) -> Var) -> f64 {
    let mut tape = Tape::new();
    let l = loss(store, &mut tape);
    let grads = tape.backward(l, store.len()).unwrap();
    let coords: Vec<_> = store
        .ids()
        .flat_map(|id| (0..store.get(id).len()).map(move |k| (id, k)))
        .collect();
    grad_check(store, &grads, &coords, 1e-6, |s| {
        let mut t = Tape::new();
        let v = loss(s, &mut t);
        t.scalar(v)
    })
}

/// Hop distances from `start` following directed edges.
pub fn bfs(g: &RxnHypergraph, start: usize) -> Vec<Option<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); g.node_count()];
    for e in g.edges() {
        out[e.src].push(e.dst);
    }
    let mut dist = vec![None; g.node_count()];
    dist[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in &out[u] {
            if dist[v].is_none() {
                dist[v] = Some(dist[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn random_rank_matrix(k: usize, rng: &mut ChaCha8Rng, coarse: bool) -> RankMatrix {
    let mut m = Array2::zeros((k, k));
    for a in 0..k {
        for b in a + 1..k {
            // Coarse values make ties and zero scores common.
            let v: f64 = if coarse {
                f64::from(rng.gen_range(-3i32..=3)) / 3.0
            } else {
                rng.gen_range(-1.0..1.0)
            };
            m[[a, b]] = v;
            m[[b, a]] = -v;
        }
    }
    RankMatrix(m)
}

/// Rearranges `p` into the next permutation in lexicographic order.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Reference ordering from enumerating all `k!` orders: the winner is the
/// order that agrees with the strongest victories, compared victory by
/// victory in locking order; the lexicographically first order wins ties.
pub fn brute_force(m: &RankMatrix) -> Vec<usize> {
    let k = m.len();
    let victories = sorted_victories(m);
    let mut order: Vec<usize> = (0..k).collect();
    let mut best: Option<(Vec<bool>, Vec<usize>)> = None;
    loop {
        let mut place = vec![0; k];
        for (pos, &c) in order.iter().enumerate() {
            place[c] = pos;
        }
        let agreement: Vec<bool> = victories.iter().map(|&(a, b)| place[a] < place[b]).collect();
        if best.as_ref().is_none_or(|(score, _)| agreement > *score) {
            best = Some((agreement, order.clone()));
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    best.unwrap().1
}

pub fn is_acyclic(k: usize, edges: &[(usize, usize)]) -> bool {
    let mut indegree = vec![0; k];
    for &(_, b) in edges {
        indegree[b] += 1;
    }
    let mut ready: Vec<usize> = (0..k).filter(|&i| indegree[i] == 0).collect();
    let mut done = 0;
    while let Some(u) = ready.pop() {
        done += 1;
        for &(a, b) in edges {
            if a == u {
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    ready.push(b);
                }
            }
        }
    }
    done == k
}
