use std::fmt;

use serde::{Deserialize, Serialize};

/// Chemical elements with a dedicated feature slot. Anything else is kept as
/// `Other` with its original symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    H,
    B,
    C,
    N,
    O,
    F,
    Si,
    P,
    S,
    Cl,
    Br,
    I,
    Other(String),
}

impl Element {
    /// The elements that get their own one-hot slot, in slot order.
    pub const SUPPORTED: [Element; 12] = [
        Element::H,
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::Si,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    /// Looks up a properly capitalised element symbol ("C", "Cl", "Na").
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        let e = match symbol {
            "H" => Element::H,
            "B" => Element::B,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "F" => Element::F,
            "Si" => Element::Si,
            "P" => Element::P,
            "S" => Element::S,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "I" => Element::I,
            other if PERIODIC_TABLE.contains(&other) => Element::Other(other.to_string()),
            _ => return None,
        };
        Some(e)
    }

    pub fn symbol(&self) -> &str {
        match self {
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::Si => "Si",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
            Element::Other(s) => s,
        }
    }

    /// Index into [`Element::SUPPORTED`], `None` for `Other`.
    pub fn slot(&self) -> Option<usize> {
        Element::SUPPORTED.iter().position(|e| e == self)
    }

    /// Elements that may be written without brackets in SMILES.
    pub fn is_organic_subset(&self) -> bool {
        matches!(
            self,
            Element::B
                | Element::C
                | Element::N
                | Element::O
                | Element::P
                | Element::S
                | Element::F
                | Element::Cl
                | Element::Br
                | Element::I
        )
    }

    /// Elements with a lowercase aromatic form in SMILES.
    pub fn can_be_aromatic(&self) -> bool {
        match self {
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S => true,
            Element::Other(s) => s == "Se" || s == "As",
            _ => false,
        }
    }

    fn valence_electrons(&self) -> Option<i32> {
        Some(match self {
            Element::H => 1,
            Element::B => 3,
            Element::C | Element::Si => 4,
            Element::N | Element::P => 5,
            Element::O | Element::S => 6,
            Element::F | Element::Cl | Element::Br | Element::I => 7,
            Element::Other(_) => return None,
        })
    }

    /// Allowed valences in increasing order, adjusted for formal charge by
    /// treating the ion like its isoelectronic neighbour (N+ like C, O- like F).
    /// Empty for elements without a valence model.
    pub fn valences(&self, charge: i8) -> Vec<u8> {
        let Some(ve) = self.valence_electrons() else {
            return Vec::new();
        };
        if *self == Element::H {
            return if charge == 0 { vec![1] } else { vec![0] };
        }
        let e = ve - charge as i32;
        if !(0..=8).contains(&e) {
            return Vec::new();
        }
        let base = if e <= 4 { e } else { 8 - e } as u8;
        // Period 3+ pnictogens and chalcogens can expand their octet.
        let expands = charge == 0 && matches!(self, Element::P | Element::S);
        if expands {
            (0..3)
                .map(|k| base + 2 * k)
                .filter(|&v| v <= ve as u8)
                .collect()
        } else {
            vec![base]
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

const PERIODIC_TABLE: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charged_valences_follow_isoelectronic_rule() {
        assert_eq!(Element::N.valences(1), vec![4]);
        assert_eq!(Element::O.valences(-1), vec![1]);
        assert_eq!(Element::C.valences(-1), vec![3]);
        assert_eq!(Element::C.valences(1), vec![3]);
        assert_eq!(Element::S.valences(0), vec![2, 4, 6]);
        assert_eq!(Element::N.valences(0), vec![3]);
        assert_eq!(Element::P.valences(0), vec![3, 5]);
        assert!(Element::Other("Na".into()).valences(1).is_empty());
    }

    #[test]
    fn symbols_round_trip() {
        for e in Element::SUPPORTED {
            assert_eq!(Element::from_symbol(e.symbol()), Some(e.clone()));
        }
        assert_eq!(Element::from_symbol("Na"), Some(Element::Other("Na".into())));
        assert_eq!(Element::from_symbol("Xx"), None);
    }
}
