mod support;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rxn_hypergraph::chem::{parse_reaction, Reaction, ReactionPermutation};
use rxn_hypergraph::data::synthetic::{random_reaction, RandomReactionOptions};
use rxn_hypergraph::hypergraph::{build_hypergraph, FeatureConfig, NodeKind, RxnHypergraph};
use support::bfs;

fn reaction(seed: u64) -> Reaction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    parse_reaction(&random_reaction(&RandomReactionOptions::default(), &mut rng)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn counts_follow_closed_form(seed in any::<u64>()) {
        let rxn = reaction(seed);
        let g = build_hypergraph(&rxn).unwrap();
        let t = rxn.total_atoms();
        let (n, m) = (rxn.reactants.len(), rxn.products.len());
        let bonds = rxn.total_bonds();
        prop_assert_eq!(g.node_count(), t + n + m + 2);
        prop_assert_eq!(
            g.edges().len(),
            2 * bonds + 2 * t + n * (n - 1) + m * (m - 1) + n + m
        );
    }

    #[test]
    fn reachability_stays_within_a_side(seed in any::<u64>()) {
        let g = build_hypergraph(&reaction(seed)).unwrap();
        for (u, kind) in g.nodes().iter().enumerate() {
            let dist = bfs(&g, u);
            if let NodeKind::Rxn { .. } = kind {
                prop_assert_eq!(g.out_degree(u), 0);
                continue;
            }
            for (v, other) in g.nodes().iter().enumerate() {
                if other.side() == kind.side() {
                    let d = dist[v];
                    prop_assert!(d.is_some() && d.unwrap() <= 3, "{u} -> {v}: {d:?}");
                } else {
                    prop_assert_eq!(dist[v], None);
                }
            }
        }
    }

    #[test]
    fn permuted_reaction_gives_isomorphic_hypergraph(seed in any::<u64>(), pseed in any::<u64>()) {
        let rxn = reaction(seed);
        let perm = ReactionPermutation::random(&rxn, &mut ChaCha8Rng::seed_from_u64(pseed));
        let g = build_hypergraph(&rxn).unwrap();
        let h = build_hypergraph(&perm.apply(&rxn).unwrap()).unwrap();
        let map = g.permuted_node_map(&perm);

        let mut seen = map.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..g.node_count()).collect::<Vec<_>>());

        let edges = |g: &RxnHypergraph, f: &dyn Fn(usize) -> usize| {
            let mut m = BTreeMap::new();
            for e in g.edges() {
                *m.entry((f(e.src), f(e.dst), e.relation)).or_insert(0) += 1;
            }
            m
        };
        prop_assert_eq!(edges(&h, &|v| map[v]), edges(&g, &|v| v));

        let cfg = FeatureConfig::default();
        let fg = cfg.featurize(&g).unwrap();
        let fh = cfg.featurize(&h).unwrap();
        for (new, &old) in map.iter().enumerate() {
            prop_assert_eq!(fh.row(new), fg.row(old));
        }
    }

    #[test]
    fn inverse_permutation_restores_the_reaction(seed in any::<u64>(), pseed in any::<u64>()) {
        let rxn = reaction(seed);
        let perm = ReactionPermutation::random(&rxn, &mut ChaCha8Rng::seed_from_u64(pseed));
        let back = perm.inverse().apply(&perm.apply(&rxn).unwrap()).unwrap();
        prop_assert_eq!(back, rxn);
    }
}

#[test]
fn each_feature_row_is_one_node_kind() {
    let rxn = parse_reaction("CC(=O)O.OCC>>CC(=O)OCC.O").unwrap();
    let g = build_hypergraph(&rxn).unwrap();
    let f = FeatureConfig::default().featurize(&g).unwrap();
    let dim = f.ncols();
    for (i, kind) in g.nodes().iter().enumerate() {
        let hyper = f.row(i).slice(ndarray::s![dim - 4..]).sum();
        match kind {
            NodeKind::Atom { .. } => assert_eq!(hyper, 0.0),
            _ => assert_eq!(f.row(i).sum(), 1.0),
        }
    }
}
