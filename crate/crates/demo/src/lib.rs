//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes and returns JSON strings. The plain `*_json` functions
//! hold the logic so it can be tested natively.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rxn_hypergraph::autodiff::ParamStore;
use rxn_hypergraph::chem::parse_reaction;
use rxn_hypergraph::gnn::{GnnModel, LayerKind, ModelConfig, Task};
use rxn_hypergraph::hypergraph::{build_hypergraph, GraphDump, NodeKind, RxnHypergraph, Side};
use rxn_hypergraph::interpret::{explain, ExplainOptions, PathLayers};
use rxn_hypergraph::ranker::{ranked_pairs, RankMatrix};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Layout {
    graph: GraphDump,
    /// (x, y) per node in a 1000 × 600 box.
    positions: Vec<(f64, f64)>,
}

/// Reactant side on the left, product side on the right. Each molecule's
/// atoms sit on a circle around its hypernode.
fn layout(g: &RxnHypergraph) -> Vec<(f64, f64)> {
    let mut pos = vec![(0.0, 0.0); g.node_count()];
    for side in [Side::Reactant, Side::Product] {
        let (x_rxn, x_mol) = match side {
            Side::Reactant => (440.0, 220.0),
            Side::Product => (560.0, 780.0),
        };
        pos[g.rxn_node(side)] = (x_rxn, 300.0);
        let mols = match side {
            Side::Reactant => g.reactant_count(),
            Side::Product => g.product_count(),
        };
        for m in 0..mols {
            let y = 600.0 * (m as f64 + 0.5) / mols as f64;
            pos[g.mol_node(side, m)] = (x_mol, y);
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); g.node_count()];
    for (i, kind) in g.nodes().iter().enumerate() {
        if let NodeKind::Atom { .. } = kind {
            if let Some(owner) = g.owner(i) {
                members[owner].push(i);
            }
        }
    }
    for (owner, atoms) in members.iter().enumerate() {
        let (cx, cy) = pos[owner];
        let r = 30.0 + 6.0 * atoms.len() as f64;
        for (k, &a) in atoms.iter().enumerate() {
            let t = std::f64::consts::TAU * k as f64 / atoms.len() as f64;
            pos[a] = (cx + r * t.cos(), cy + r * t.sin());
        }
    }
    pos
}

pub fn hypergraph_json(smirks: &str) -> Result<String, String> {
    let rxn = parse_reaction(smirks).map_err(|e| e.to_string())?;
    let g = build_hypergraph(&rxn).map_err(|e| e.to_string())?;
    let out = Layout {
        positions: layout(&g),
        graph: g.dump(smirks),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Attention scores from a fixed-seed, untrained 3-layer RGAT.
pub fn explain_json(smirks: &str, averaged: bool, top_k: Option<usize>) -> Result<String, String> {
    let rxn = parse_reaction(smirks).map_err(|e| e.to_string())?;
    let mut store = ParamStore::new();
    let mut cfg = ModelConfig::new(LayerKind::Rgat, 3, 16, Task::Embed);
    cfg.heads = 2;
    let model = GnnModel::new(cfg, &mut store, "", &mut ChaCha8Rng::seed_from_u64(7)).map_err(|e| e.to_string())?;
    let opts = ExplainOptions {
        path_layers: if averaged { PathLayers::Averaged } else { PathLayers::Final },
        top_k,
    };
    let report = explain(&model, &store, &rxn, &opts).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct RankOut {
    order: Vec<usize>,
    locked: Vec<(usize, usize)>,
}

/// `matrix` is a square JSON array of pairwise scores; `m[a][b] > 0` means
/// `a` beats `b`.
pub fn rank_json(matrix: &str) -> Result<String, String> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(matrix).map_err(|e| e.to_string())?;
    let k = rows.len();
    if k == 0 || rows.iter().any(|r| r.len() != k) {
        return Err("expected a non-empty square matrix".into());
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err("scores must be finite".into());
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let m = RankMatrix(ndarray::Array2::from_shape_vec((k, k), flat).map_err(|e| e.to_string())?);
    let r = ranked_pairs(&m);
    serde_json::to_string(&RankOut {
        order: r.order,
        locked: r.locked,
    })
    .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn hypergraph(smirks: &str) -> Result<String, JsError> {
    hypergraph_json(smirks).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = explainReaction)]
pub fn explain_reaction(smirks: &str, averaged: bool, top_k: Option<u32>) -> Result<String, JsError> {
    explain_json(smirks, averaged, top_k.map(|k| k as usize)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = rankedPairs)]
pub fn ranked_pairs_js(matrix: &str) -> Result<String, JsError> {
    rank_json(matrix).map_err(|e| JsError::new(&e))
}
