use serde::{Deserialize, Serialize};

use super::{NodeKind, Relation, RxnHypergraph, Side};

pub const DUMP_FORMAT_VERSION: u32 = 1;

/// JSON-friendly view of a hypergraph. Node ids are the graph's node indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDump {
    pub format_version: u32,
    pub reaction: String,
    pub nodes: Vec<NodeDump>,
    pub edges: Vec<EdgeDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDump {
    pub id: usize,
    /// "atom", "mol" or "rxn".
    pub kind: String,
    pub side: Side,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mol: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub atom: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub element: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub charge: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aromatic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hydrogens: Option<u8>,
    /// Set on reactant mol-hypernodes that came from the agent field.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub agent: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeDump {
    pub src: usize,
    pub dst: usize,
    pub relation: Relation,
}

impl RxnHypergraph {
    pub fn dump(&self, reaction: &str) -> GraphDump {
        let nodes = self
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, node)| {
                let mut d = NodeDump {
                    id,
                    kind: String::new(),
                    side: node.side(),
                    mol: None,
                    atom: None,
                    element: None,
                    charge: None,
                    aromatic: None,
                    hydrogens: None,
                    agent: None,
                };
                match *node {
                    NodeKind::Atom { mol, atom, .. } => {
                        let a = self.atom(id).expect("atom node has attributes");
                        d.kind = "atom".into();
                        d.mol = Some(mol);
                        d.atom = Some(atom);
                        d.element = Some(a.element.to_string());
                        d.charge = Some(a.formal_charge);
                        d.aromatic = Some(a.aromatic);
                        d.hydrogens = Some(a.implicit_h);
                    }
                    NodeKind::Mol { side, mol } => {
                        d.kind = "mol".into();
                        d.mol = Some(mol);
                        if side == Side::Reactant {
                            d.agent = Some(self.agents()[mol]);
                        }
                    }
                    NodeKind::Rxn { .. } => d.kind = "rxn".into(),
                }
                d
            })
            .collect();
        let edges = self
            .edges()
            .iter()
            .map(|e| EdgeDump {
                src: e.src,
                dst: e.dst,
                relation: e.relation,
            })
            .collect();
        GraphDump {
            format_version: DUMP_FORMAT_VERSION,
            reaction: reaction.to_string(),
            nodes,
            edges,
        }
    }
}
