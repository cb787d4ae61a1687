//! Pairwise plausibility scores between candidate reactions and their
//! aggregation into one order per candidate set.

use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::gnn::{GnnModel, GraphBatch, ModelConfig, ModelError, PreparedGraph, Task};
use crate::train::Objective;

pub const RANKING_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankerError {
    #[error("pair {0} compares a reaction with itself")]
    DegeneratePair(usize),
    #[error("no training pairs")]
    NoPairs,
    #[error("query {query}: true index {index} is outside {candidates} candidates")]
    TruthMissing {
        query: usize,
        index: usize,
        candidates: usize,
    },
    #[error("{rankings} rankings but {truths} true indices")]
    LengthMismatch { rankings: usize, truths: usize },
    #[error("ranking {0} is not a permutation of its candidates")]
    NotPermutation(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Shared embedding model plus a bias-free projection `w`:
/// `score(a, b) = tanh(w · (X_a − X_b))`.
#[derive(Debug, Clone)]
pub struct PairwiseRanker {
    pub embed: GnnModel,
    pub w: ParamId,
}

impl PairwiseRanker {
    /// `config.task` is replaced by [`Task::Embed`].
    pub fn new<R: Rng + ?Sized>(
        mut config: ModelConfig,
        store: &mut ParamStore,
        prefix: &str,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        config.task = Task::Embed;
        let embed = GnnModel::new(config, store, prefix, rng)?;
        let w = store.add_glorot(format!("{prefix}rank.w"), embed.config.latent_dim(), 1, rng);
        Ok(PairwiseRanker { embed, w })
    }

    /// Scores of rows of `xa` against the matching rows of `xb`.
    pub fn score_latents(&self, tape: &mut Tape, store: &ParamStore, xa: Var, xb: Var) -> Result<Var, ModelError> {
        let w = tape.param(store, self.w);
        let d = tape.sub(xa, xb)?;
        let s = tape.matmul(d, w)?;
        Ok(tape.tanh(s)?)
    }

    pub fn embed(&self, store: &ParamStore, graphs: &[&PreparedGraph]) -> Result<Array2<f64>, ModelError> {
        Ok(self.embed.predict(store, graphs, 64)?.0)
    }

    pub fn score(&self, store: &ParamStore, a: &PreparedGraph, b: &PreparedGraph) -> Result<f64, ModelError> {
        let x = self.embed(store, &[a, b])?;
        Ok(self.score_rows(store, x.row(0), x.row(1)))
    }

    fn score_rows(&self, store: &ParamStore, a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
        let w = store.get(self.w).column(0);
        (&a - &b).dot(&w).tanh()
    }

    /// All pairwise scores of one candidate set.
    pub fn rank_matrix(&self, store: &ParamStore, candidates: &[&PreparedGraph]) -> Result<RankMatrix, ModelError> {
        let x = self.embed(store, candidates)?;
        let k = candidates.len();
        let mut m = Array2::zeros((k, k));
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    m[[a, b]] = self.score_rows(store, x.row(a), x.row(b));
                }
            }
        }
        Ok(RankMatrix(m))
    }
}

/// `k × k` pairwise scores; `M[a][b] > 0` means `a` beats `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix(pub Array2<f64>);

impl RankMatrix {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    /// Largest `|M[a][b] + M[b][a]|`.
    pub fn antisymmetry_error(&self) -> f64 {
        let m = &self.0;
        let mut worst: f64 = 0.0;
        for a in 0..m.nrows() {
            for b in 0..m.nrows() {
                worst = worst.max((m[[a, b]] + m[[b, a]]).abs());
            }
        }
        worst
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

/// Outcome of ranked-pairs voting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedPairs {
    /// Candidate indices, best first.
    pub order: Vec<usize>,
    /// Locked (winner, loser) pairs in locking order.
    pub locked: Vec<(usize, usize)>,
}

/// Pairs with a positive score, strongest first; equal scores by (winner,
/// loser).
pub fn sorted_victories(m: &RankMatrix) -> Vec<(usize, usize)> {
    let k = m.len();
    let mut pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| (0..k).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && m.0[[a, b]] > 0.0)
        .collect();
    pairs.sort_by(|&(a, b), &(c, d)| m.0[[c, d]].total_cmp(&m.0[[a, b]]).then((a, b).cmp(&(c, d))));
    pairs
}

fn reaches(adj: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut stack = vec![from];
    let mut seen = vec![false; adj.len()];
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        if !std::mem::replace(&mut seen[u], true) {
            stack.extend(&adj[u]);
        }
    }
    false
}

/// Tideman's ranked pairs: lock victories from strongest down, skipping any
/// that would close a cycle, then order the locked graph topologically,
/// taking the lowest available index first.
pub fn ranked_pairs(m: &RankMatrix) -> RankedPairs {
    let k = m.len();
    let mut adj = vec![Vec::new(); k];
    let mut locked = Vec::new();
    for (a, b) in sorted_victories(m) {
        if !reaches(&adj, b, a) {
            adj[a].push(b);
            locked.push((a, b));
        }
    }
    let mut indegree = vec![0usize; k];
    for &(_, b) in &locked {
        indegree[b] += 1;
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..k).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(k);
    while let Some(Reverse(u)) = ready.pop() {
        order.push(u);
        for &v in &adj[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.push(Reverse(v));
            }
        }
    }
    debug_assert_eq!(order.len(), k, "locked graph is acyclic");
    RankedPairs { order, locked }
}

/// Fraction of sets whose true candidate is within the first `k` places,
/// for each `k` in `ks`.
pub fn top_k_accuracy(rankings: &[Vec<usize>], truth: &[usize], ks: &[usize]) -> Result<Vec<(usize, f64)>, RankerError> {
    if rankings.len() != truth.len() {
        return Err(RankerError::LengthMismatch {
            rankings: rankings.len(),
            truths: truth.len(),
        });
    }
    let mut positions = Vec::with_capacity(truth.len());
    for (q, (order, &t)) in rankings.iter().zip(truth).enumerate() {
        let distinct: BTreeSet<usize> = order.iter().copied().collect();
        if distinct.len() != order.len() || distinct.iter().any(|&i| i >= order.len()) {
            return Err(RankerError::NotPermutation(q));
        }
        let pos = order.iter().position(|&i| i == t).ok_or(RankerError::TruthMissing {
            query: q,
            index: t,
            candidates: order.len(),
        })?;
        positions.push(pos);
    }
    let n = positions.len().max(1) as f64;
    Ok(ks
        .iter()
        .map(|&k| (k, positions.iter().filter(|&&p| p < k).count() as f64 / n))
        .collect())
}

/// Trains `score(better, worse)` towards +1 with squared error. Both sides
/// of a pair go through the same embedding model in one batch.
pub struct PairObjective<'a> {
    pub ranker: &'a PairwiseRanker,
    pub graphs: &'a [PreparedGraph],
    /// (better, worse) indices into `graphs`.
    pub pairs: &'a [(usize, usize)],
}

impl<'a> PairObjective<'a> {
    pub fn new(
        ranker: &'a PairwiseRanker,
        graphs: &'a [PreparedGraph],
        pairs: &'a [(usize, usize)],
    ) -> Result<Self, RankerError> {
        if pairs.is_empty() {
            return Err(RankerError::NoPairs);
        }
        if let Some(i) = pairs.iter().position(|(a, b)| a == b) {
            return Err(RankerError::DegeneratePair(i));
        }
        Ok(PairObjective { ranker, graphs, pairs })
    }
}

impl Objective for PairObjective<'_> {
    fn example_count(&self) -> usize {
        self.pairs.len()
    }

    fn loss(&self, tape: &mut Tape, store: &ParamStore, batch: &[usize]) -> Result<Var, ModelError> {
        let mut local: HashMap<usize, usize> = HashMap::new();
        let mut members = Vec::new();
        let mut slot = |g: usize| {
            *local.entry(g).or_insert_with(|| {
                members.push(g);
                members.len() - 1
            })
        };
        let (ia, ib): (Vec<usize>, Vec<usize>) = batch
            .iter()
            .map(|&p| {
                let (a, b) = self.pairs[p];
                (slot(a), slot(b))
            })
            .unzip();
        let graphs: Vec<&PreparedGraph> = members.iter().map(|&g| &self.graphs[g]).collect();
        let gb = GraphBatch::new(&graphs)?;
        let pass = self.ranker.embed.forward(tape, store, &gb, false)?;
        let xa = tape.gather_rows(pass.latent, &ia)?;
        let xb = tape.gather_rows(pass.latent, &ib)?;
        let s = self.ranker.score_latents(tape, store, xa, xb)?;
        Ok(tape.mse(s, Array2::ones((batch.len(), 1)))?)
    }
}

/// One line of a candidate-set file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateQuery {
    pub query_id: String,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_index: Option<usize>,
}

/// One line of ranking output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRecord {
    pub format_version: u32,
    pub query_id: String,
    pub order: Vec<usize>,
    pub scores: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::chem::parse_reaction;
    use crate::gnn::LayerKind;

    #[test]
    fn cycle_is_broken_at_weakest_pair() {
        // A>B 0.8, B>C 0.6, C>A 0.4
        let m = RankMatrix(array![[0.0, 0.8, -0.4], [-0.8, 0.0, 0.6], [0.4, -0.6, 0.0]]);
        let r = ranked_pairs(&m);
        assert_eq!(r.locked, vec![(0, 1), (1, 2)]);
        assert_eq!(r.order, vec![0, 1, 2]);
    }

    #[test]
    fn singleton_and_utility_orders() {
        assert_eq!(ranked_pairs(&RankMatrix(Array2::zeros((1, 1)))).order, vec![0]);
        let u: [f64; 4] = [0.3, -1.0, 2.0, 0.9];
        let m = RankMatrix(Array2::from_shape_fn((4, 4), |(a, b)| (u[a] - u[b]).tanh()));
        assert_eq!(ranked_pairs(&m).order, vec![2, 3, 0, 1]);
    }

    #[test]
    fn all_zero_scores_keep_index_order() {
        assert_eq!(ranked_pairs(&RankMatrix(Array2::zeros((3, 3)))).order, vec![0, 1, 2]);
    }

    #[test]
    fn top_k_counts_and_errors() {
        let rankings = vec![vec![2, 0, 1], vec![0, 1, 2]];
        let acc = top_k_accuracy(&rankings, &[2, 1], &[1, 2, 3]).unwrap();
        assert_eq!(acc, vec![(1, 0.5), (2, 1.0), (3, 1.0)]);
        assert!(matches!(
            top_k_accuracy(&rankings, &[2, 5], &[1]),
            Err(RankerError::TruthMissing { query: 1, .. })
        ));
        assert!(top_k_accuracy(&[vec![0, 0]], &[0], &[1]).is_err());
    }

    #[test]
    fn scores_are_antisymmetric_and_bounded() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = ModelConfig::new(LayerKind::Rgat, 3, 8, Task::Embed);
        let ranker = PairwiseRanker::new(cfg, &mut store, "", &mut rng).unwrap();
        let graphs: Vec<PreparedGraph> = ["CBr.CO>>COC.Br", "CBr.N>>CN.Br", "CCBr.CS>>CCSC.Br"]
            .iter()
            .map(|s| ranker.embed.prepare(&parse_reaction(s).unwrap()).unwrap())
            .collect();
        let refs: Vec<&PreparedGraph> = graphs.iter().collect();
        let m = ranker.rank_matrix(&store, &refs).unwrap();
        assert_eq!(m.antisymmetry_error(), 0.0);
        assert!(m.0.iter().all(|v| v.abs() < 1.0));
        assert_eq!(ranker.score(&store, &graphs[0], &graphs[0]).unwrap(), 0.0);
        let ab = ranker.score(&store, &graphs[0], &graphs[1]).unwrap();
        let ba = ranker.score(&store, &graphs[1], &graphs[0]).unwrap();
        assert_eq!(ab, -ba);
    }

    #[test]
    fn degenerate_pairs_are_rejected() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = ModelConfig::new(LayerKind::Rgat, 3, 8, Task::Embed);
        let ranker = PairwiseRanker::new(cfg, &mut store, "", &mut rng).unwrap();
        assert!(matches!(
            PairObjective::new(&ranker, &[], &[(0, 1), (2, 2)]),
            Err(RankerError::DegeneratePair(1))
        ));
        assert!(matches!(PairObjective::new(&ranker, &[], &[]), Err(RankerError::NoPairs)));
    }
}
