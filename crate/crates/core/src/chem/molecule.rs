use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::element::Element;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub aromatic: bool,
    /// Total attached hydrogens (implicit or written inside brackets).
    pub implicit_h: u8,
    pub radical_electrons: u8,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            formal_charge: 0,
            aromatic: false,
            implicit_h: 0,
            radical_electrons: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub const ALL: [BondOrder; 4] = [
        BondOrder::Single,
        BondOrder::Double,
        BondOrder::Triple,
        BondOrder::Aromatic,
    ];

    /// Contribution to the valence sum. Aromatic bonds count as single; the
    /// extra pi electron is accounted for per atom.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    /// Stable small integer used by hashing and feature code.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub u: usize,
    pub v: usize,
    pub order: BondOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("molecule has no atoms")]
    Empty,
    #[error("bond {index} joins atom {atom} to itself")]
    SelfLoop { index: usize, atom: usize },
    #[error("bond {index} references atom {atom} but the molecule has {len} atoms")]
    BadIndex { index: usize, atom: usize, len: usize },
    #[error("bond {index} duplicates an existing bond between atoms {u} and {v}")]
    Duplicate { index: usize, u: usize, v: usize },
    #[error("aromatic bond {index} joins a non-aromatic atom")]
    AromaticMismatch { index: usize },
    #[error("invalid atom {index}: {reason}")]
    BadAtom { index: usize, reason: &'static str },
    #[error("invalid atom permutation of length {got} for {expected} atoms")]
    BadPermutation { expected: usize, got: usize },
}

/// Heavy-atom molecular graph. Hydrogens live in [`Atom::implicit_h`] unless
/// written as explicit bracket atoms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

impl MolecularGraph {
    /// Validates per-atom and per-bond invariants. Connectivity is a property
    /// of SMILES parsing and is not enforced here.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        if atoms.is_empty() {
            return Err(GraphError::Empty);
        }
        for (index, atom) in atoms.iter().enumerate() {
            if atom.implicit_h > 8 {
                return Err(GraphError::BadAtom {
                    index,
                    reason: "more than 8 hydrogens",
                });
            }
            if atom.formal_charge.abs() > 4 {
                return Err(GraphError::BadAtom {
                    index,
                    reason: "formal charge magnitude above 4",
                });
            }
        }
        let mut seen = HashSet::with_capacity(bonds.len());
        for (index, b) in bonds.iter().enumerate() {
            for atom in [b.u, b.v] {
                if atom >= atoms.len() {
                    return Err(GraphError::BadIndex {
                        index,
                        atom,
                        len: atoms.len(),
                    });
                }
            }
            if b.u == b.v {
                return Err(GraphError::SelfLoop { index, atom: b.u });
            }
            if !seen.insert((b.u.min(b.v), b.u.max(b.v))) {
                return Err(GraphError::Duplicate {
                    index,
                    u: b.u,
                    v: b.v,
                });
            }
            if b.order == BondOrder::Aromatic && !(atoms[b.u].aromatic && atoms[b.v].aromatic) {
                return Err(GraphError::AromaticMismatch { index });
            }
        }
        Ok(MolecularGraph { atoms, bonds })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Neighbour lists `(neighbour, order)` indexed by atom, in bond order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, BondOrder)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for b in &self.bonds {
            adj[b.u].push((b.v, b.order));
            adj[b.v].push((b.u, b.order));
        }
        adj
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.bonds
            .iter()
            .filter(|b| b.u == atom || b.v == atom)
            .count()
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.atoms.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(a) = stack.pop() {
            for &(b, _) in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    count += 1;
                    stack.push(b);
                }
            }
        }
        count == self.atoms.len()
    }

    /// Relabels atoms so that new atom `k` is old atom `perm[k]`.
    pub fn permute_atoms(&self, perm: &[usize]) -> Result<MolecularGraph, GraphError> {
        let n = self.atoms.len();
        let inverse = invert(perm, n).ok_or(GraphError::BadPermutation {
            expected: n,
            got: perm.len(),
        })?;
        let atoms = perm.iter().map(|&old| self.atoms[old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                u: inverse[b.u],
                v: inverse[b.v],
                order: b.order,
            })
            .collect();
        Ok(MolecularGraph { atoms, bonds })
    }
}

/// Inverse of a permutation given as `new -> old`, or `None` if `perm` is not
/// a permutation of `0..n`.
pub(crate) fn invert(perm: &[usize], n: usize) -> Option<Vec<usize>> {
    if perm.len() != n {
        return None;
    }
    let mut inverse = vec![usize::MAX; n];
    for (new, &old) in perm.iter().enumerate() {
        if old >= n || inverse[old] != usize::MAX {
            return None;
        }
        inverse[old] = new;
    }
    Some(inverse)
}
