//! SMILES reader for the organic subset, bracket atoms, branches and ring
//! closures (including `%nn`). Stereo marks, isotopes and atom-map classes are
//! accepted and dropped.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use super::element::Element;
use super::molecule::{Atom, Bond, BondOrder, MolecularGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedEnd,
    /// A '.' inside what must be a single molecule.
    Disconnected,
    UnbalancedBranch,
    EmptyBranch,
    UnbalancedRingClosure(u16),
    RingBondConflict(u16),
    RingToSelf(u16),
    DuplicateBond,
    DanglingBond,
    AromaticBondMismatch,
    ValenceOverflow { element: String, used: u8 },
    UnsupportedBracket(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => write!(f, "empty SMILES"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "syntax error: unexpected {c:?}"),
            ParseErrorKind::UnexpectedEnd => write!(f, "syntax error: unexpected end of input"),
            ParseErrorKind::Disconnected => write!(f, "'.' not allowed inside one molecule"),
            ParseErrorKind::UnbalancedBranch => write!(f, "unbalanced branch parenthesis"),
            ParseErrorKind::EmptyBranch => write!(f, "empty branch"),
            ParseErrorKind::UnbalancedRingClosure(n) => write!(f, "ring closure {n} never closed"),
            ParseErrorKind::RingBondConflict(n) => {
                write!(f, "ring closure {n} has conflicting bond symbols")
            }
            ParseErrorKind::RingToSelf(n) => write!(f, "ring closure {n} bonds an atom to itself"),
            ParseErrorKind::DuplicateBond => write!(f, "duplicate bond between the same atoms"),
            ParseErrorKind::DanglingBond => write!(f, "bond symbol without an atom on both sides"),
            ParseErrorKind::AromaticBondMismatch => {
                write!(f, "aromatic bond between non-aromatic atoms")
            }
            ParseErrorKind::ValenceOverflow { element, used } => {
                write!(f, "valence overflow: {element} with {used} bonds")
            }
            ParseErrorKind::UnsupportedBracket(s) => write!(f, "unsupported bracket content {s:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondSymbol {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            // '/' and '\' are directional singles; the direction is dropped.
            b'-' | b'/' | b'\\' => Some(BondSymbol::Single),
            b'=' => Some(BondSymbol::Double),
            b'#' => Some(BondSymbol::Triple),
            b':' => Some(BondSymbol::Aromatic),
            _ => None,
        }
    }
}

struct PendingBond {
    u: usize,
    v: usize,
    symbol: Option<BondSymbol>,
    offset: usize,
}

struct RingOpen {
    atom: usize,
    symbol: Option<BondSymbol>,
    offset: usize,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_offsets: Vec<usize>,
    bracketed: Vec<bool>,
    bonds: Vec<PendingBond>,
    bonded: HashSet<(usize, usize)>,
    rings: BTreeMap<u16, RingOpen>,
    branches: Vec<(usize, usize)>,
    prev: Option<usize>,
    pending: Option<(BondSymbol, usize)>,
    just_opened_branch: bool,
}

/// Parses one dot-free SMILES fragment into a heavy-atom graph.
pub fn parse_molecule(smiles: &str) -> Result<MolecularGraph, ParseError> {
    Parser::new(smiles).run()
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            text: text.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            atom_offsets: Vec::new(),
            bracketed: Vec::new(),
            bonds: Vec::new(),
            bonded: HashSet::new(),
            rings: BTreeMap::new(),
            branches: Vec::new(),
            prev: None,
            pending: None,
            just_opened_branch: false,
        }
    }

    fn err<T>(&self, offset: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError { offset, kind })
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match std::str::from_utf8(&self.text[self.pos..])
            .ok()
            .and_then(|s| s.chars().next())
        {
            Some(c) => self.err(self.pos, ParseErrorKind::UnexpectedChar(c)),
            None => self.err(self.pos, ParseErrorKind::UnexpectedEnd),
        }
    }

    fn run(mut self) -> Result<MolecularGraph, ParseError> {
        if self.text.is_empty() {
            return self.err(0, ParseErrorKind::Empty);
        }
        while let Some(c) = self.peek() {
            match c {
                b'[' => {
                    let start = self.pos;
                    let (atom, _) = self.bracket_atom()?;
                    self.add_atom(atom, start, true)?;
                }
                b'(' => {
                    let Some(prev) = self.prev else {
                        return self.unexpected();
                    };
                    if self.pending.is_some() {
                        return self.err(self.pos, ParseErrorKind::DanglingBond);
                    }
                    self.branches.push((prev, self.pos));
                    self.just_opened_branch = true;
                    self.pos += 1;
                }
                b')' => {
                    if self.just_opened_branch {
                        return self.err(self.pos, ParseErrorKind::EmptyBranch);
                    }
                    if self.pending.is_some() {
                        return self.err(self.pos, ParseErrorKind::DanglingBond);
                    }
                    let Some((atom, _)) = self.branches.pop() else {
                        return self.err(self.pos, ParseErrorKind::UnbalancedBranch);
                    };
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'.' => return self.err(self.pos, ParseErrorKind::Disconnected),
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                c if BondSymbol::from_byte(c).is_some() => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return self.err(self.pos, ParseErrorKind::DanglingBond);
                    }
                    self.pending = Some((BondSymbol::from_byte(c).unwrap(), self.pos));
                    self.pos += 1;
                }
                _ => {
                    let start = self.pos;
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, start, false)?;
                }
            }
        }
        if let Some((_, offset)) = self.pending {
            return self.err(offset, ParseErrorKind::DanglingBond);
        }
        if let Some(&(_, offset)) = self.branches.last() {
            return self.err(offset, ParseErrorKind::UnbalancedBranch);
        }
        if let Some((&n, open)) = self.rings.iter().next() {
            return self.err(open.offset, ParseErrorKind::UnbalancedRingClosure(n));
        }
        self.finish()
    }

    fn organic_atom(&mut self) -> Result<Atom, ParseError> {
        let c = self.text[self.pos];
        let next = self.text.get(self.pos + 1).copied();
        let (element, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => (Element::Cl, false, 2),
            (b'B', Some(b'r')) => (Element::Br, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            _ => return self.unexpected(),
        };
        self.pos += len;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<(Atom, usize), ParseError> {
        let start = self.pos;
        self.pos += 1;
        let unsupported = |p: &Parser| -> ParseError {
            let end = p.text[start..]
                .iter()
                .position(|&b| b == b']')
                .map(|e| start + e + 1)
                .unwrap_or(p.text.len());
            ParseError {
                offset: p.pos,
                kind: ParseErrorKind::UnsupportedBracket(
                    String::from_utf8_lossy(&p.text[start..end]).into_owned(),
                ),
            }
        };

        // isotope
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }

        let (element, aromatic) = match self.peek() {
            Some(c @ b'A'..=b'Z') => {
                let one = (c as char).to_string();
                let two = self
                    .text
                    .get(self.pos + 1)
                    .filter(|b| b.is_ascii_lowercase())
                    .map(|&b| format!("{one}{}", b as char));
                match two.as_deref().and_then(Element::from_symbol) {
                    Some(e) => {
                        self.pos += 2;
                        (e, false)
                    }
                    None => match Element::from_symbol(&one) {
                        Some(e) => {
                            self.pos += 1;
                            (e, false)
                        }
                        None => return Err(unsupported(self)),
                    },
                }
            }
            Some(b'a'..=b'z') => {
                let rest = &self.text[self.pos..];
                let (sym, len) = if rest.starts_with(b"se") {
                    ("Se", 2)
                } else if rest.starts_with(b"as") {
                    ("As", 2)
                } else {
                    match rest[0] {
                        b'b' => ("B", 1),
                        b'c' => ("C", 1),
                        b'n' => ("N", 1),
                        b'o' => ("O", 1),
                        b'p' => ("P", 1),
                        b's' => ("S", 1),
                        _ => return Err(unsupported(self)),
                    }
                };
                self.pos += len;
                (Element::from_symbol(sym).expect("aromatic symbols are elements"), true)
            }
            _ => return Err(unsupported(self)),
        };

        // chirality: @, @@, @TH1, @SP2, @OH12 ...
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            } else if self.text[self.pos..].len() >= 2
                && self.text[self.pos].is_ascii_uppercase()
                && self.text[self.pos + 1].is_ascii_uppercase()
            {
                self.pos += 2;
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            }
        }

        let mut hydrogens: u32 = 0;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = 1;
            if let Some(n) = self.number() {
                hydrogens = n;
            }
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            charge = unit;
            if let Some(n) = self.number() {
                charge = unit * n as i32;
            } else {
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
        }

        // atom class
        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.number().is_none() {
                return Err(unsupported(self));
            }
        }

        if self.peek() != Some(b']') {
            return Err(unsupported(self));
        }
        self.pos += 1;

        if hydrogens > 8 || charge.abs() > 4 {
            self.pos = start + 1;
            return Err(unsupported(self));
        }
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        atom.implicit_h = hydrogens as u8;
        atom.formal_charge = charge as i8;
        Ok((atom, start))
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) && self.pos - start < 4 {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            std::str::from_utf8(&self.text[start..self.pos])
                .ok()?
                .parse()
                .ok()
        }
    }

    fn ring_closure(&mut self) -> Result<(), ParseError> {
        let offset = self.pos;
        let Some(atom) = self.prev else {
            return self.unexpected();
        };
        let number = if self.text[self.pos] == b'%' {
            let digits = self.text.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    ((d[0] - b'0') as u16) * 10 + (d[1] - b'0') as u16
                }
                _ => return self.err(offset, ParseErrorKind::UnexpectedChar('%')),
            }
        } else {
            self.pos += 1;
            (self.text[offset] - b'0') as u16
        };
        let symbol = self.pending.take().map(|(s, _)| s);
        match self.rings.remove(&number) {
            Some(open) => {
                if open.atom == atom {
                    return self.err(offset, ParseErrorKind::RingToSelf(number));
                }
                let symbol = match (open.symbol, symbol) {
                    (Some(a), Some(b)) if a != b => {
                        return self.err(offset, ParseErrorKind::RingBondConflict(number))
                    }
                    (a, b) => a.or(b),
                };
                self.add_bond(open.atom, atom, symbol, offset)?;
            }
            None => {
                self.rings.insert(
                    number,
                    RingOpen {
                        atom,
                        symbol,
                        offset,
                    },
                );
            }
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom, offset: usize, bracketed: bool) -> Result<(), ParseError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        self.atom_offsets.push(offset);
        self.bracketed.push(bracketed);
        if let Some(prev) = self.prev {
            let (symbol, bond_offset) = match self.pending.take() {
                Some((s, o)) => (Some(s), o),
                None => (None, offset),
            };
            self.add_bond(prev, idx, symbol, bond_offset)?;
        } else if let Some((_, o)) = self.pending {
            return self.err(o, ParseErrorKind::DanglingBond);
        }
        self.prev = Some(idx);
        self.just_opened_branch = false;
        Ok(())
    }

    fn add_bond(
        &mut self,
        u: usize,
        v: usize,
        symbol: Option<BondSymbol>,
        offset: usize,
    ) -> Result<(), ParseError> {
        if !self.bonded.insert((u.min(v), u.max(v))) {
            return self.err(offset, ParseErrorKind::DuplicateBond);
        }
        self.bonds.push(PendingBond {
            u,
            v,
            symbol,
            offset,
        });
        Ok(())
    }

    fn finish(self) -> Result<MolecularGraph, ParseError> {
        let mut atoms = self.atoms;
        let mut bonds = Vec::with_capacity(self.bonds.len());
        for b in &self.bonds {
            let both_aromatic = atoms[b.u].aromatic && atoms[b.v].aromatic;
            let order = match b.symbol {
                None if both_aromatic => BondOrder::Aromatic,
                None | Some(BondSymbol::Single) => BondOrder::Single,
                Some(BondSymbol::Double) => BondOrder::Double,
                Some(BondSymbol::Triple) => BondOrder::Triple,
                Some(BondSymbol::Aromatic) if both_aromatic => BondOrder::Aromatic,
                Some(BondSymbol::Aromatic) => {
                    return Err(ParseError {
                        offset: b.offset,
                        kind: ParseErrorKind::AromaticBondMismatch,
                    })
                }
            };
            bonds.push(Bond {
                u: b.u,
                v: b.v,
                order,
            });
        }

        let mut incident: Vec<Vec<BondOrder>> = vec![Vec::new(); atoms.len()];
        for b in &bonds {
            incident[b.u].push(b.order);
            incident[b.v].push(b.order);
        }
        for (i, atom) in atoms.iter_mut().enumerate() {
            if self.bracketed[i] {
                atom.radical_electrons = radical_electrons(atom, &incident[i]);
            } else {
                match default_hydrogens(&atom.element, atom.aromatic, &incident[i]) {
                    Some(h) => atom.implicit_h = h,
                    None => {
                        return Err(ParseError {
                            offset: self.atom_offsets[i],
                            kind: ParseErrorKind::ValenceOverflow {
                                element: atom.element.symbol().to_string(),
                                used: bond_valence(&atom.element, atom.aromatic, &incident[i]),
                            },
                        })
                    }
                }
            }
        }
        MolecularGraph::new(atoms, bonds).map_err(|e| ParseError {
            offset: 0,
            kind: ParseErrorKind::UnsupportedBracket(e.to_string()),
        })
    }
}

/// Valence consumed by explicit bonds. Aromatic atoms that donate to the pi
/// system through an aromatic bond (and carry no exocyclic double bond) use
/// one extra unit.
pub(crate) fn bond_valence(element: &Element, aromatic: bool, incident: &[BondOrder]) -> u8 {
    let mut used: u8 = incident.iter().map(|o| o.valence()).sum();
    let has_aromatic_bond = incident.contains(&BondOrder::Aromatic);
    let has_double = incident.contains(&BondOrder::Double);
    let pi_donor = matches!(element, Element::B | Element::C | Element::N | Element::P);
    if aromatic && has_aromatic_bond && !has_double && pi_donor {
        used += 1;
    }
    used
}

/// Implicit hydrogens for an organic-subset atom: lowest standard valence that
/// fits the bonds, minus the bonds. `None` when every valence is exceeded.
pub(crate) fn default_hydrogens(
    element: &Element,
    aromatic: bool,
    incident: &[BondOrder],
) -> Option<u8> {
    let used = bond_valence(element, aromatic, incident);
    element
        .valences(0)
        .into_iter()
        .find(|&v| v >= used)
        .map(|v| v - used)
}

fn radical_electrons(atom: &Atom, incident: &[BondOrder]) -> u8 {
    let used = bond_valence(&atom.element, atom.aromatic, incident) + atom.implicit_h;
    match atom
        .element
        .valences(atom.formal_charge)
        .into_iter()
        .find(|&v| v >= used)
    {
        Some(v) => v - used,
        None => 0,
    }
}
