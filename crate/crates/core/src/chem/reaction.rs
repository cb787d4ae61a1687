use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::molecule::{invert, GraphError, MolecularGraph};
use super::smiles::{parse_molecule, ParseError};

/// A reaction as two ordered molecule lists. Molecules from the SMIRKS agent
/// field are appended to `reactants` and flagged in `agents`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reaction {
    pub reactants: Vec<MolecularGraph>,
    pub products: Vec<MolecularGraph>,
    /// Parallel to `reactants`: true for molecules that came from the agent field.
    pub agents: Vec<bool>,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReactionError {
    #[error("expected exactly two '>' separators, found {found}")]
    Separators { found: usize },
    #[error("empty {side} side")]
    EmptySide { side: &'static str },
    #[error("empty molecule at fragment {fragment} (byte {offset})")]
    EmptyFragment { fragment: usize, offset: usize },
    #[error("fragment {fragment}: {source}")]
    Molecule {
        fragment: usize,
        /// Offset of the error within the whole reaction text.
        offset: usize,
        source: ParseError,
    },
}

impl ReactionError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ReactionError::EmptyFragment { offset, .. } | ReactionError::Molecule { offset, .. } => {
                Some(*offset)
            }
            _ => None,
        }
    }

    pub fn fragment(&self) -> Option<usize> {
        match self {
            ReactionError::EmptyFragment { fragment, .. }
            | ReactionError::Molecule { fragment, .. } => Some(*fragment),
            _ => None,
        }
    }
}

/// Parses `reactants>agents>products`. Fragments are numbered left to right
/// across all three fields.
pub fn parse_reaction(smirks: &str) -> Result<Reaction, ReactionError> {
    let text = smirks.trim_end_matches(['\n', '\r']);
    let separators: Vec<usize> = text.match_indices('>').map(|(i, _)| i).collect();
    if separators.len() != 2 {
        return Err(ReactionError::Separators {
            found: separators.len(),
        });
    }
    let fields = [
        (0, &text[..separators[0]]),
        (separators[0] + 1, &text[separators[0] + 1..separators[1]]),
        (separators[1] + 1, &text[separators[1] + 1..]),
    ];
    if fields[0].1.is_empty() {
        return Err(ReactionError::EmptySide { side: "reactant" });
    }
    if fields[2].1.is_empty() {
        return Err(ReactionError::EmptySide { side: "product" });
    }

    let mut fragment = 0;
    let mut parsed: [Vec<MolecularGraph>; 3] = Default::default();
    for (field_idx, &(base, field)) in fields.iter().enumerate() {
        if field.is_empty() {
            continue;
        }
        let mut offset = base;
        for piece in field.split('.') {
            if piece.is_empty() {
                return Err(ReactionError::EmptyFragment { fragment, offset });
            }
            let mol = parse_molecule(piece).map_err(|source| ReactionError::Molecule {
                fragment,
                offset: offset + source.offset,
                source,
            })?;
            parsed[field_idx].push(mol);
            offset += piece.len() + 1;
            fragment += 1;
        }
    }
    let [mut reactants, agent_mols, products] = parsed;
    let mut agents = vec![false; reactants.len()];
    agents.extend(std::iter::repeat(true).take(agent_mols.len()));
    reactants.extend(agent_mols);
    Ok(Reaction {
        reactants,
        products,
        agents,
        source_text: text.to_string(),
    })
}

impl Reaction {
    pub fn total_atoms(&self) -> usize {
        self.reactants
            .iter()
            .chain(&self.products)
            .map(|m| m.atom_count())
            .sum()
    }

    pub fn total_bonds(&self) -> usize {
        self.reactants
            .iter()
            .chain(&self.products)
            .map(|m| m.bonds().len())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PermutationError {
    #[error("reactant order is not a permutation of {expected} molecules")]
    Reactants { expected: usize },
    #[error("product order is not a permutation of {expected} molecules")]
    Products { expected: usize },
    #[error("expected {expected} atom permutations, got {got}")]
    AtomListCount { expected: usize, got: usize },
    #[error("molecule {molecule}: {source}")]
    Atoms { molecule: usize, source: GraphError },
}

/// Relabelling of a reaction. All permutations map new position to old
/// position; atom permutations are indexed by the original molecule order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionPermutation {
    pub reactant_atoms: Vec<Vec<usize>>,
    pub product_atoms: Vec<Vec<usize>>,
    pub reactants: Vec<usize>,
    pub products: Vec<usize>,
}

impl ReactionPermutation {
    pub fn identity(rxn: &Reaction) -> Self {
        let ident = |mols: &[MolecularGraph]| -> Vec<Vec<usize>> {
            mols.iter().map(|m| (0..m.atom_count()).collect()).collect()
        };
        ReactionPermutation {
            reactant_atoms: ident(&rxn.reactants),
            product_atoms: ident(&rxn.products),
            reactants: (0..rxn.reactants.len()).collect(),
            products: (0..rxn.products.len()).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(rxn: &Reaction, rng: &mut R) -> Self {
        let mut p = Self::identity(rxn);
        for perm in p.reactant_atoms.iter_mut().chain(p.product_atoms.iter_mut()) {
            perm.shuffle(rng);
        }
        p.reactants.shuffle(rng);
        p.products.shuffle(rng);
        p
    }

    pub fn apply(&self, rxn: &Reaction) -> Result<Reaction, PermutationError> {
        let n = rxn.reactants.len();
        let m = rxn.products.len();
        if self.reactant_atoms.len() != n {
            return Err(PermutationError::AtomListCount {
                expected: n,
                got: self.reactant_atoms.len(),
            });
        }
        if self.product_atoms.len() != m {
            return Err(PermutationError::AtomListCount {
                expected: m,
                got: self.product_atoms.len(),
            });
        }
        invert(&self.reactants, n).ok_or(PermutationError::Reactants { expected: n })?;
        invert(&self.products, m).ok_or(PermutationError::Products { expected: m })?;

        let relabel = |mols: &[MolecularGraph], perms: &[Vec<usize>], offset: usize| {
            mols.iter()
                .zip(perms)
                .enumerate()
                .map(|(i, (mol, perm))| {
                    mol.permute_atoms(perm)
                        .map_err(|source| PermutationError::Atoms {
                            molecule: offset + i,
                            source,
                        })
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let reactants = relabel(&rxn.reactants, &self.reactant_atoms, 0)?;
        let products = relabel(&rxn.products, &self.product_atoms, n)?;
        Ok(Reaction {
            reactants: self.reactants.iter().map(|&i| reactants[i].clone()).collect(),
            products: self.products.iter().map(|&i| products[i].clone()).collect(),
            agents: self.reactants.iter().map(|&i| rxn.agents[i]).collect(),
            source_text: rxn.source_text.clone(),
        })
    }

    /// The permutation that undoes `self` when applied to its output.
    pub fn inverse(&self) -> Self {
        let invert_side = |order: &[usize], atoms: &[Vec<usize>]| {
            let inv_order = invert(order, order.len()).expect("valid permutation");
            // Atom lists of the inverse are indexed by the permuted molecule order.
            let inv_atoms = order
                .iter()
                .map(|&old| invert(&atoms[old], atoms[old].len()).expect("valid permutation"))
                .collect();
            (inv_order, inv_atoms)
        };
        let (reactants, reactant_atoms) = invert_side(&self.reactants, &self.reactant_atoms);
        let (products, product_atoms) = invert_side(&self.products, &self.product_atoms);
        ReactionPermutation {
            reactant_atoms,
            product_atoms,
            reactants,
            products,
        }
    }
}

/// Relabels atoms within each molecule and reorders the molecules of each side.
/// `atom_perms` lists reactant permutations then product permutations in the
/// original molecule order.
pub fn permute_reaction(
    rxn: &Reaction,
    atom_perms: &[Vec<usize>],
    mol_perm_r: &[usize],
    mol_perm_p: &[usize],
) -> Result<Reaction, PermutationError> {
    let n = rxn.reactants.len();
    let expected = n + rxn.products.len();
    if atom_perms.len() != expected {
        return Err(PermutationError::AtomListCount {
            expected,
            got: atom_perms.len(),
        });
    }
    ReactionPermutation {
        reactant_atoms: atom_perms[..n].to_vec(),
        product_atoms: atom_perms[n..].to_vec(),
        reactants: mol_perm_r.to_vec(),
        products: mol_perm_p.to_vec(),
    }
    .apply(rxn)
}
