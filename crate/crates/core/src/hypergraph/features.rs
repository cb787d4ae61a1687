use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{NodeKind, RxnHypergraph, Side};
use crate::chem::{Atom, Element};

/// Layout of the initial node features. Atom rows use the element, charge,
/// aromatic, hydrogen and radical slots; hypernode rows use only the four
/// trailing hypernode slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub elements: Vec<Element>,
    /// Shared slot for elements not listed in `elements`.
    pub other_slot: bool,
    /// Charges are clamped into `min_charge..=max_charge`, one slot each.
    pub min_charge: i8,
    pub max_charge: i8,
    /// Hydrogen counts `0..max_h`, plus one slot for `max_h` or more.
    pub max_h: u8,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            elements: Element::SUPPORTED.to_vec(),
            other_slot: true,
            min_charge: -2,
            max_charge: 2,
            max_h: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeatureError {
    #[error("element {0} has no feature slot and the other slot is disabled")]
    UncoveredElement(String),
    #[error("invalid feature config: {0}")]
    InvalidConfig(&'static str),
}

impl FeatureConfig {
    fn element_slots(&self) -> usize {
        self.elements.len() + usize::from(self.other_slot)
    }

    fn charge_slots(&self) -> usize {
        (self.max_charge as i32 - self.min_charge as i32 + 1) as usize
    }

    fn h_slots(&self) -> usize {
        self.max_h as usize + 1
    }

    /// First hypernode slot.
    fn hyper_offset(&self) -> usize {
        self.element_slots() + self.charge_slots() + 1 + self.h_slots() + 1
    }

    pub fn dim(&self) -> usize {
        self.hyper_offset() + 4
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.min_charge > self.max_charge {
            return Err(FeatureError::InvalidConfig("min_charge exceeds max_charge"));
        }
        if self.element_slots() == 0 {
            return Err(FeatureError::InvalidConfig("no element slots"));
        }
        Ok(())
    }

    fn atom_row(&self, atom: &Atom, row: &mut [f64]) -> Result<(), FeatureError> {
        let slot = match self.elements.iter().position(|e| *e == atom.element) {
            Some(i) => i,
            None if self.other_slot => self.elements.len(),
            None => return Err(FeatureError::UncoveredElement(atom.element.to_string())),
        };
        row[slot] = 1.0;
        let mut off = self.element_slots();
        let q = atom.formal_charge.clamp(self.min_charge, self.max_charge);
        row[off + (q as i32 - self.min_charge as i32) as usize] = 1.0;
        off += self.charge_slots();
        if atom.aromatic {
            row[off] = 1.0;
        }
        off += 1;
        row[off + atom.implicit_h.min(self.max_h) as usize] = 1.0;
        off += self.h_slots();
        if atom.radical_electrons > 0 {
            row[off] = 1.0;
        }
        Ok(())
    }

    /// One row per node, `dim()` columns.
    pub fn featurize(&self, g: &RxnHypergraph) -> Result<Array2<f64>, FeatureError> {
        self.validate()?;
        let mut x = Array2::zeros((g.node_count(), self.dim()));
        let hyper = self.hyper_offset();
        for (i, node) in g.nodes().iter().enumerate() {
            let mut row = x.row_mut(i);
            let row = row.as_slice_mut().expect("standard layout");
            match *node {
                NodeKind::Atom { .. } => {
                    self.atom_row(g.atom(i).expect("atom node has attributes"), row)?
                }
                NodeKind::Mol { side, .. } => {
                    row[hyper + usize::from(side == Side::Product)] = 1.0;
                }
                NodeKind::Rxn { side } => {
                    row[hyper + 2 + usize::from(side == Side::Product)] = 1.0;
                }
            }
        }
        Ok(x)
    }
}
