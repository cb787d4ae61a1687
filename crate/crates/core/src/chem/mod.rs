//! Molecules and reactions: SMILES/SMIRKS parsing, writing and relabelling.

mod element;
mod molecule;
mod reaction;
mod smiles;
mod writer;

pub use element::Element;
pub use molecule::{Atom, Bond, BondOrder, GraphError, MolecularGraph};
pub use reaction::{
    parse_reaction, permute_reaction, PermutationError, Reaction, ReactionError,
    ReactionPermutation,
};
pub use smiles::{parse_molecule, ParseError, ParseErrorKind};
pub use writer::write_molecule;

