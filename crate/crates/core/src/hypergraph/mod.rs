//! The reaction hypergraph: every molecular graph of a reaction, one hypernode
//! per molecule, one per side, and typed directed edges between them.

mod dump;
mod features;

use serde::{Deserialize, Serialize};

use crate::chem::{Atom, BondOrder, MolecularGraph, Reaction, ReactionPermutation};

pub use dump::{GraphDump, DUMP_FORMAT_VERSION};
pub use features::{FeatureConfig, FeatureError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Reactant,
    Product,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Reactant => "reactant",
            Side::Product => "product",
        }
    }
}

/// What a node stands for. `mol` indexes the molecules of `side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Atom { side: Side, mol: usize, atom: usize },
    Mol { side: Side, mol: usize },
    Rxn { side: Side },
}

impl NodeKind {
    pub fn side(&self) -> Side {
        match *self {
            NodeKind::Atom { side, .. } | NodeKind::Mol { side, .. } | NodeKind::Rxn { side } => {
                side
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    BondSingle,
    BondDouble,
    BondTriple,
    BondAromatic,
    AtomMol,
    MolAtom,
    MolMol,
    MolRxn,
}

impl Relation {
    pub const COUNT: usize = 8;
    pub const ALL: [Relation; 8] = [
        Relation::BondSingle,
        Relation::BondDouble,
        Relation::BondTriple,
        Relation::BondAromatic,
        Relation::AtomMol,
        Relation::MolAtom,
        Relation::MolMol,
        Relation::MolRxn,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_bond(order: BondOrder) -> Relation {
        match order {
            BondOrder::Single => Relation::BondSingle,
            BondOrder::Double => Relation::BondDouble,
            BondOrder::Triple => Relation::BondTriple,
            BondOrder::Aromatic => Relation::BondAromatic,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::BondSingle => "bond-single",
            Relation::BondDouble => "bond-double",
            Relation::BondTriple => "bond-triple",
            Relation::BondAromatic => "bond-aromatic",
            Relation::AtomMol => "atom-mol",
            Relation::MolAtom => "mol-atom",
            Relation::MolMol => "mol-mol",
            Relation::MolRxn => "mol-rxn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HypergraphError {
    #[error("reaction has no reactants")]
    NoReactants,
    #[error("reaction has no products")]
    NoProducts,
    #[error("molecule {0} has no atoms")]
    EmptyMolecule(usize),
    #[error("agent flags cover {flags} molecules but there are {reactants} reactants")]
    AgentFlags { flags: usize, reactants: usize },
}

/// Node order: reactant atoms, product atoms, reactant mol-hypernodes,
/// product mol-hypernodes, reactant rxn-hypernode, product rxn-hypernode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxnHypergraph {
    nodes: Vec<NodeKind>,
    /// Attributes of the atom nodes, indexed like the first `T` nodes.
    atoms: Vec<Atom>,
    edges: Vec<Edge>,
    reactant_sizes: Vec<usize>,
    product_sizes: Vec<usize>,
    agents: Vec<bool>,
    bond_count: usize,
}

pub fn build_hypergraph(rxn: &Reaction) -> Result<RxnHypergraph, HypergraphError> {
    if rxn.reactants.is_empty() {
        return Err(HypergraphError::NoReactants);
    }
    if rxn.products.is_empty() {
        return Err(HypergraphError::NoProducts);
    }
    if rxn.agents.len() != rxn.reactants.len() {
        return Err(HypergraphError::AgentFlags {
            flags: rxn.agents.len(),
            reactants: rxn.reactants.len(),
        });
    }
    let sides: [(Side, &[MolecularGraph]); 2] = [
        (Side::Reactant, &rxn.reactants),
        (Side::Product, &rxn.products),
    ];
    let mut nodes = Vec::new();
    let mut atoms = Vec::new();
    let mut edges = Vec::new();
    let mut bond_count = 0;

    // Atom nodes and bond edges. Remember each molecule's first atom node.
    let mut mol_starts: [Vec<usize>; 2] = Default::default();
    for (si, &(side, mols)) in sides.iter().enumerate() {
        for (mi, mol) in mols.iter().enumerate() {
            if mol.atom_count() == 0 {
                return Err(HypergraphError::EmptyMolecule(mi));
            }
            let start = nodes.len();
            mol_starts[si].push(start);
            for (ai, atom) in mol.atoms().iter().enumerate() {
                nodes.push(NodeKind::Atom {
                    side,
                    mol: mi,
                    atom: ai,
                });
                atoms.push(atom.clone());
            }
            for b in mol.bonds() {
                let relation = Relation::from_bond(b.order);
                let (u, v) = (start + b.u, start + b.v);
                edges.push(Edge {
                    src: u,
                    dst: v,
                    relation,
                });
                edges.push(Edge {
                    src: v,
                    dst: u,
                    relation,
                });
            }
            bond_count += mol.bonds().len();
        }
    }

    let mut mol_nodes: [Vec<usize>; 2] = Default::default();
    for (si, &(side, mols)) in sides.iter().enumerate() {
        for mi in 0..mols.len() {
            mol_nodes[si].push(nodes.len());
            nodes.push(NodeKind::Mol { side, mol: mi });
        }
    }
    let rxn_nodes = [nodes.len(), nodes.len() + 1];
    nodes.push(NodeKind::Rxn {
        side: Side::Reactant,
    });
    nodes.push(NodeKind::Rxn {
        side: Side::Product,
    });

    for (si, &(_, mols)) in sides.iter().enumerate() {
        for (mi, mol) in mols.iter().enumerate() {
            let m = mol_nodes[si][mi];
            let start = mol_starts[si][mi];
            for a in start..start + mol.atom_count() {
                edges.push(Edge {
                    src: a,
                    dst: m,
                    relation: Relation::AtomMol,
                });
                edges.push(Edge {
                    src: m,
                    dst: a,
                    relation: Relation::MolAtom,
                });
            }
        }
        for &m in &mol_nodes[si] {
            for &other in &mol_nodes[si] {
                if m != other {
                    edges.push(Edge {
                        src: m,
                        dst: other,
                        relation: Relation::MolMol,
                    });
                }
            }
        }
        for &m in &mol_nodes[si] {
            edges.push(Edge {
                src: m,
                dst: rxn_nodes[si],
                relation: Relation::MolRxn,
            });
        }
    }

    Ok(RxnHypergraph {
        nodes,
        atoms,
        edges,
        reactant_sizes: rxn.reactants.iter().map(|m| m.atom_count()).collect(),
        product_sizes: rxn.products.iter().map(|m| m.atom_count()).collect(),
        agents: rxn.agents.clone(),
        bond_count,
    })
}

impl RxnHypergraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Attributes of atom node `node`, `None` for hypernodes.
    pub fn atom(&self, node: usize) -> Option<&Atom> {
        self.atoms.get(node)
    }

    pub fn total_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bond_count
    }

    pub fn reactant_count(&self) -> usize {
        self.reactant_sizes.len()
    }

    pub fn product_count(&self) -> usize {
        self.product_sizes.len()
    }

    pub fn molecule_sizes(&self, side: Side) -> &[usize] {
        match side {
            Side::Reactant => &self.reactant_sizes,
            Side::Product => &self.product_sizes,
        }
    }

    pub fn agents(&self) -> &[bool] {
        &self.agents
    }

    pub fn mol_node(&self, side: Side, mol: usize) -> usize {
        let base = self.total_atoms();
        match side {
            Side::Reactant => base + mol,
            Side::Product => base + self.reactant_count() + mol,
        }
    }

    pub fn rxn_node(&self, side: Side) -> usize {
        let base = self.total_atoms() + self.reactant_count() + self.product_count();
        match side {
            Side::Reactant => base,
            Side::Product => base + 1,
        }
    }

    pub fn atom_node(&self, side: Side, mol: usize, atom: usize) -> usize {
        let mut start = 0;
        if side == Side::Product {
            start += self.reactant_sizes.iter().sum::<usize>();
        }
        start + self.molecule_sizes(side)[..mol].iter().sum::<usize>() + atom
    }

    /// Mol-hypernode owning an atom node.
    pub fn owner(&self, node: usize) -> Option<usize> {
        match self.nodes.get(node)? {
            NodeKind::Atom { side, mol, .. } => Some(self.mol_node(*side, *mol)),
            _ => None,
        }
    }

    /// Edges of one relation as (src, dst), sorted by (dst, src).
    pub fn relation_adjacency(&self, relation: Relation) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|e| e.relation == relation)
            .map(|e| (e.src, e.dst))
            .collect();
        pairs.sort_unstable_by_key(|&(s, d)| (d, s));
        pairs
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.src == node).count()
    }

    /// For the hypergraph of `perm.apply(rxn)`, where `self` is built from
    /// `rxn`: the node of `self` that each permuted node came from.
    pub fn permuted_node_map(&self, perm: &ReactionPermutation) -> Vec<usize> {
        let mut map = Vec::with_capacity(self.node_count());
        let sides = [
            (Side::Reactant, &perm.reactants, &perm.reactant_atoms),
            (Side::Product, &perm.products, &perm.product_atoms),
        ];
        for &(side, order, atoms) in &sides {
            for &old in order.iter() {
                map.extend(atoms[old].iter().map(|&a| self.atom_node(side, old, a)));
            }
        }
        for &(side, order, _) in &sides {
            map.extend(order.iter().map(|&old| self.mol_node(side, old)));
        }
        map.push(self.rxn_node(Side::Reactant));
        map.push(self.rxn_node(Side::Product));
        map
    }

    /// Expected node and directed edge counts for these molecule sizes.
    pub fn expected_counts(&self) -> (usize, usize) {
        let t = self.total_atoms();
        let n = self.reactant_count();
        let m = self.product_count();
        let nodes = t + n + m + 2;
        let edges = 2 * self.bond_count + 2 * t + n * (n - 1) + m * (m - 1) + n + m;
        (nodes, edges)
    }
}
