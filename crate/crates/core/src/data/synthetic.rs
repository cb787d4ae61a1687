//! Generated tasks with known answers, so training can be checked without
//! external data.
//!
//! The classification task is a condensation between a carboxylic acid and an
//! O/N/S nucleophile. The class says where a marker group sits: on the acid
//! (0), on the nucleophile (1), or only on a spectator molecule that does not
//! react (2). Markers sit at least five bonds from the reacting atoms, so
//! their radius-2 circular environments are identical on both sides and
//! cancel in a product-minus-reactant fingerprint; classes 0 and 1 are then
//! indistinguishable to that representation.
//!
//! The ranking task swaps a bromide for one of a fixed pool of substituents.
//! Each substituent has a hidden utility; the best candidate of a set is the
//! one with the highest utility.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::chem::parse_reaction;

/// Marker written before an acid chain and after a nucleophile chain.
const MARKERS: [(&str, &str); 4] = [
    ("Br", "Br"),
    ("N#C", "C#N"),
    ("FC(F)(F)", "C(F)(F)F"),
    ("c1ccccc1", "c1ccccc1"),
];

const NUCLEOPHILES: [&str; 3] = ["O", "N", "S"];

const SOLVENTS: [&str; 3] = ["ClCCl", "CS(=O)C", "C1CCOC1"];

const SPECTATOR_TAILS: [&str; 3] = ["CC", "CCC", "CC(C)C"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub count: usize,
    pub seed: u64,
    /// Probability of adding a solvent in the agent field.
    pub solvent_rate: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            count: 1000,
            seed: 0,
            solvent_rate: 0.3,
        }
    }
}

fn chain(n: usize) -> String {
    "C".repeat(n)
}

/// One reaction of class `label` (0, 1 or 2).
pub fn condensation<R: Rng + ?Sized>(label: usize, solvent_rate: f64, rng: &mut R) -> String {
    assert!(label < 3, "three classes");
    let (prefix, suffix) = MARKERS[rng.gen_range(0..MARKERS.len())];
    let x = NUCLEOPHILES[rng.gen_range(0..NUCLEOPHILES.len())];
    let acid_chain = chain(rng.gen_range(5..=7));
    let nuc_chain = chain(rng.gen_range(5..=7));
    let (acid_prefix, nuc_suffix) = match label {
        0 => (prefix, ""),
        1 => ("", suffix),
        _ => ("", ""),
    };
    let acid = format!("{acid_prefix}{acid_chain}C(=O)O");
    let nucleophile = format!("{x}{nuc_chain}{nuc_suffix}");
    let product = format!("{acid_prefix}{acid_chain}C(=O){x}{nuc_chain}{nuc_suffix}");

    let mut reactants = vec![acid, nucleophile];
    let tail = SPECTATOR_TAILS[rng.gen_range(0..SPECTATOR_TAILS.len())];
    if label == 2 {
        reactants.push(format!("{prefix}{tail}"));
    } else if rng.gen_bool(0.5) {
        reactants.push(tail.to_string());
    }
    reactants.shuffle(rng);
    let agents = if rng.gen_bool(solvent_rate) {
        SOLVENTS[rng.gen_range(0..SOLVENTS.len())]
    } else {
        ""
    };
    let mut products = vec![product, "O".to_string()];
    products.shuffle(rng);
    format!("{}>{agents}>{}", reactants.join("."), products.join("."))
}

/// Balanced three-class dataset in shuffled order.
pub fn functional_group_task(opts: &ClassifyOptions) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut labels: Vec<usize> = (0..opts.count).map(|i| i % 3).collect();
    labels.shuffle(&mut rng);
    let text: String = labels
        .iter()
        .map(|&l| format!("{}\t{l}\n", condensation(l, opts.solvent_rate, &mut rng)))
        .collect();
    if text.is_empty() {
        return Dataset::default();
    }
    Dataset::from_tsv(&text).expect("generated reactions parse")
}

/// Chain pieces with one open bond on each side.
const MIDDLE_UNITS: [&str; 12] = [
    "C", "C", "C", "N", "O", "S", "C(C)", "C(=O)", "C=C", "C(F)", "c1ccc(cc1)", "C1CCC(CC1)",
];

/// Chain ends with one open bond.
const END_UNITS: [&str; 9] = ["C", "F", "Cl", "Br", "O", "N", "C#N", "[O-]", "[NH3+]"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomReactionOptions {
    /// Upper bound on molecules per side, at least 1.
    pub max_molecules: usize,
    /// Upper bound on chain pieces per molecule, at least 1.
    pub max_units: usize,
    /// Whether to sometimes put a molecule in the agent field.
    pub agents: bool,
}

impl Default for RandomReactionOptions {
    fn default() -> Self {
        RandomReactionOptions {
            max_molecules: 3,
            max_units: 6,
            agents: true,
        }
    }
}

/// A random valid molecule written as SMILES.
pub fn random_molecule<R: Rng + ?Sized>(max_units: usize, rng: &mut R) -> String {
    let units = rng.gen_range(1..=max_units.max(1));
    if units == 1 {
        return END_UNITS[rng.gen_range(0..END_UNITS.len())].to_string();
    }
    let mut s = String::from("C");
    for _ in 1..units - 1 {
        s.push_str(MIDDLE_UNITS[rng.gen_range(0..MIDDLE_UNITS.len())]);
    }
    s.push_str(END_UNITS[rng.gen_range(0..END_UNITS.len())]);
    s
}

/// A random reaction with no chemical meaning, for structural tests.
pub fn random_reaction<R: Rng + ?Sized>(opts: &RandomReactionOptions, rng: &mut R) -> String {
    let side = |rng: &mut R| -> String {
        let n = rng.gen_range(1..=opts.max_molecules.max(1));
        (0..n)
            .map(|_| random_molecule(opts.max_units, rng))
            .collect::<Vec<_>>()
            .join(".")
    };
    let reactants = side(rng);
    let products = side(rng);
    let agents = if opts.agents && rng.gen_bool(0.3) {
        random_molecule(2, rng)
    } else {
        String::new()
    };
    format!("{reactants}>{agents}>{products}")
}

/// (attached form, reagent) pairs.
const SUBSTITUENTS: [(&str, &str); 24] = [
    ("OC", "CO"),
    ("OCC", "CCO"),
    ("N", "N"),
    ("NC", "CN"),
    ("N(C)C", "CNC"),
    ("C#N", "C#N"),
    ("SC", "CS"),
    ("O", "O"),
    ("N1CCCC1", "C1CCNC1"),
    ("N1CCOCC1", "C1COCCN1"),
    ("Oc1ccccc1", "Oc1ccccc1"),
    ("Nc1ccccc1", "Nc1ccccc1"),
    ("OC(C)C", "CC(C)O"),
    ("SCC", "CCS"),
    ("NCC", "CCN"),
    ("OCC=C", "C=CCO"),
    ("NCc1ccccc1", "NCc1ccccc1"),
    ("N1CCCCC1", "C1CCNCC1"),
    ("OCCO", "OCCO"),
    ("C#CC", "CC#C"),
    ("OCC(F)(F)F", "OCC(F)(F)F"),
    ("SC(C)C", "CC(C)S"),
    ("N(CC)CC", "CCNCC"),
    ("NCCO", "NCCO"),
];

/// Cores that end at the atom carrying the bromide.
const CORES: [&str; 16] = [
    "c1ccccc1",
    "Cc1ccc(cc1)",
    "COc1ccc(cc1)",
    "Fc1ccc(cc1)",
    "Clc1ccc(cc1)",
    "c1ccc2ccccc2c1",
    "n1ccccc1",
    "c1ccncc1",
    "C1CCCCC1",
    "CCCC",
    "CC(C)C",
    "CC(C)(C)C",
    "CC(=O)c1ccc(cc1)",
    "O=C(OC)c1ccc(cc1)",
    "c1ccsc1",
    "FC(F)(F)c1ccc(cc1)",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub query_id: String,
    pub candidates: Vec<String>,
    /// Hidden plausibility of each candidate; higher is better.
    pub utilities: Vec<f64>,
    pub true_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingOptions {
    pub queries: usize,
    pub candidates: usize,
    pub seed: u64,
    /// Seeds the hidden utility of each substituent. Sets generated with the
    /// same scale seed are consistent with each other.
    pub scale_seed: u64,
}

impl Default for RankingOptions {
    fn default() -> Self {
        RankingOptions {
            queries: 100,
            candidates: 20,
            seed: 0,
            scale_seed: 0,
        }
    }
}

pub fn substituent_utilities(scale_seed: u64) -> Vec<f64> {
    let mut ranks: Vec<usize> = (0..SUBSTITUENTS.len()).collect();
    ranks.shuffle(&mut ChaCha8Rng::seed_from_u64(scale_seed ^ 0x5eed_cafe));
    ranks.into_iter().map(|r| r as f64).collect()
}

pub fn ranking_task(opts: &RankingOptions) -> Vec<CandidateSet> {
    assert!(
        (1..=SUBSTITUENTS.len()).contains(&opts.candidates),
        "between 1 and {} candidates",
        SUBSTITUENTS.len()
    );
    let utility = substituent_utilities(opts.scale_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.queries)
        .map(|q| {
            let core = CORES[rng.gen_range(0..CORES.len())];
            let mut pool: Vec<usize> = (0..SUBSTITUENTS.len()).collect();
            pool.shuffle(&mut rng);
            pool.truncate(opts.candidates);
            let candidates = pool
                .iter()
                .map(|&s| {
                    let (attach, reagent) = SUBSTITUENTS[s];
                    format!("{core}Br.{reagent}>>{core}{attach}.Br")
                })
                .collect();
            let utilities: Vec<f64> = pool.iter().map(|&s| utility[s]).collect();
            let true_index = (0..utilities.len())
                .max_by(|&a, &b| utilities[a].total_cmp(&utilities[b]))
                .expect("nonempty");
            CandidateSet {
                query_id: format!("q{q}"),
                candidates,
                utilities,
                true_index,
            }
        })
        .collect()
}

/// Ordered (better, worse) training pairs: every candidate against the best
/// one, plus `extra` random pairs per set.
pub fn ranking_pairs(sets: &[CandidateSet], extra: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for set in sets {
        let k = set.candidates.len();
        let mut push = |a: usize, b: usize| {
            let (hi, lo) = if set.utilities[a] >= set.utilities[b] {
                (a, b)
            } else {
                (b, a)
            };
            pairs.push((set.candidates[hi].clone(), set.candidates[lo].clone()));
        };
        for i in 0..k {
            if i != set.true_index {
                push(set.true_index, i);
            }
        }
        if k > 1 {
            for _ in 0..extra {
                let a = rng.gen_range(0..k);
                let mut b = rng.gen_range(0..k - 1);
                if b >= a {
                    b += 1;
                }
                push(a, b);
            }
        }
    }
    pairs
}

/// Checks that every candidate of every set parses.
pub fn validate_sets(sets: &[CandidateSet]) -> bool {
    sets.iter()
        .all(|s| s.candidates.iter().all(|c| parse_reaction(c).is_ok()))
}
