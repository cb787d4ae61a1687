use ndarray::{concatenate, Array2, Axis};

use super::ModelError;
use crate::chem::Reaction;
use crate::hypergraph::{build_hypergraph, FeatureConfig, Relation, RxnHypergraph, Side};

/// A hypergraph with its initial node features.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub graph: RxnHypergraph,
    pub features: Array2<f64>,
}

impl PreparedGraph {
    pub fn new(rxn: &Reaction, cfg: &FeatureConfig) -> Result<Self, ModelError> {
        let graph = build_hypergraph(rxn)?;
        let features = cfg.featurize(&graph)?;
        Ok(PreparedGraph { graph, features })
    }
}

/// Edges of one relation inside a batch, sorted by (dst, src), with the
/// index lists the layers need precomputed.
#[derive(Debug, Clone, Default)]
pub struct RelationIndex {
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// Sorted distinct nodes touching this relation.
    pub involved: Vec<usize>,
    pub src_local: Vec<usize>,
    pub dst_local: Vec<usize>,
    /// Sorted distinct destination nodes.
    pub targets: Vec<usize>,
    /// Position in `targets` of each edge's destination.
    pub edge_group: Vec<usize>,
}

impl RelationIndex {
    fn from_pairs(pairs: Vec<(usize, usize)>, n: usize) -> Self {
        let mut slot = vec![usize::MAX; n];
        let mut involved: Vec<usize> = pairs.iter().flat_map(|&(s, d)| [s, d]).collect();
        involved.sort_unstable();
        involved.dedup();
        for (i, &node) in involved.iter().enumerate() {
            slot[node] = i;
        }
        let mut targets: Vec<usize> = Vec::new();
        let mut edge_group = Vec::with_capacity(pairs.len());
        for &(_, d) in &pairs {
            if targets.last() != Some(&d) {
                targets.push(d);
            }
            edge_group.push(targets.len() - 1);
        }
        RelationIndex {
            src_local: pairs.iter().map(|&(s, _)| slot[s]).collect(),
            dst_local: pairs.iter().map(|&(_, d)| slot[d]).collect(),
            src: pairs.iter().map(|&(s, _)| s).collect(),
            dst: pairs.iter().map(|&(_, d)| d).collect(),
            involved,
            targets,
            edge_group,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

/// Several hypergraphs merged into one disconnected graph.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub features: Array2<f64>,
    pub node_count: usize,
    /// Indexed by [`Relation::index`].
    pub relations: Vec<RelationIndex>,
    pub offsets: Vec<usize>,
    pub rxn_reactant: Vec<usize>,
    pub rxn_product: Vec<usize>,
    /// Number of relations with at least one in-edge, per node.
    pub relations_present: Vec<usize>,
}

impl GraphBatch {
    pub fn new(graphs: &[&PreparedGraph]) -> Result<Self, ModelError> {
        if graphs.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let width = graphs[0].features.ncols();
        for g in graphs {
            if g.features.ncols() != width || g.features.nrows() != g.graph.node_count() {
                return Err(ModelError::Dimension {
                    what: "node features",
                    expected: width,
                    got: g.features.ncols(),
                });
            }
        }
        let views: Vec<_> = graphs.iter().map(|g| g.features.view()).collect();
        let features = concatenate(Axis(0), &views).expect("widths checked");
        let mut offsets = Vec::with_capacity(graphs.len());
        let mut per_relation: Vec<Vec<(usize, usize)>> = vec![Vec::new(); Relation::COUNT];
        let mut rxn_reactant = Vec::new();
        let mut rxn_product = Vec::new();
        let mut offset = 0;
        for g in graphs {
            offsets.push(offset);
            for e in g.graph.edges() {
                per_relation[e.relation.index()].push((offset + e.src, offset + e.dst));
            }
            rxn_reactant.push(offset + g.graph.rxn_node(Side::Reactant));
            rxn_product.push(offset + g.graph.rxn_node(Side::Product));
            offset += g.graph.node_count();
        }
        let n = offset;
        let mut relations_present = vec![0; n];
        let relations = per_relation
            .into_iter()
            .map(|mut pairs| {
                pairs.sort_unstable_by_key(|&(s, d)| (d, s));
                let idx = RelationIndex::from_pairs(pairs, n);
                for &t in &idx.targets {
                    relations_present[t] += 1;
                }
                idx
            })
            .collect();
        Ok(GraphBatch {
            features,
            node_count: n,
            relations,
            offsets,
            rxn_reactant,
            rxn_product,
            relations_present,
        })
    }

    pub fn graph_count(&self) -> usize {
        self.offsets.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_reaction;

    #[test]
    fn batch_offsets_and_indices() {
        let cfg = FeatureConfig::default();
        let a = PreparedGraph::new(&parse_reaction("C>>C").unwrap(), &cfg).unwrap();
        let b = PreparedGraph::new(&parse_reaction("CCO.CC(=O)O>>CC(=O)OCC.O").unwrap(), &cfg)
            .unwrap();
        let batch = GraphBatch::new(&[&a, &b]).unwrap();
        assert_eq!(batch.node_count, 26);
        assert_eq!(batch.offsets, vec![0, 6]);
        assert_eq!(batch.rxn_reactant, vec![4, 24]);
        assert_eq!(batch.rxn_product, vec![5, 25]);
        let total: usize = batch.relations.iter().map(|r| r.src.len()).sum();
        assert_eq!(total, 6 + 56);
        let mol_rxn = &batch.relations[Relation::MolRxn.index()];
        assert_eq!(mol_rxn.targets, vec![4, 5, 24, 25]);
        for r in &batch.relations {
            for e in 0..r.src.len() {
                assert_eq!(r.involved[r.src_local[e]], r.src[e]);
                assert_eq!(r.involved[r.dst_local[e]], r.dst[e]);
                assert_eq!(r.targets[r.edge_group[e]], r.dst[e]);
            }
        }
        // Rxn nodes only receive mol-rxn edges.
        assert_eq!(batch.relations_present[4], 1);
    }
}
