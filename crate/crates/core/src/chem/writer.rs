use std::collections::BTreeSet;
use std::fmt::Write;

use super::molecule::{Atom, BondOrder, MolecularGraph};
use super::smiles::default_hydrogens;

/// Writes a SMILES string that parses back to an isomorphic graph. The output
/// is not canonical: it follows atom order with a depth-first walk from atom 0.
pub fn write_molecule(mol: &MolecularGraph) -> String {
    let n = mol.atom_count();
    let mut adj = mol.adjacency();
    for list in &mut adj {
        list.sort_by_key(|&(nb, _)| nb);
    }

    // First pass: spanning forest and the bonds left over as ring closures.
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<(usize, BondOrder)>> = vec![Vec::new(); n];
    let mut closures: Vec<Vec<(usize, BondOrder)>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    let mut tree_edge = BTreeSet::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        roots.push(start);
        visited[start] = true;
        let mut stack = vec![(start, 0usize)];
        while let Some(&mut (atom, ref mut next)) = stack.last_mut() {
            if *next == adj[atom].len() {
                stack.pop();
                continue;
            }
            let (nb, order) = adj[atom][*next];
            *next += 1;
            if !visited[nb] {
                visited[nb] = true;
                children[atom].push((nb, order));
                tree_edge.insert((atom.min(nb), atom.max(nb)));
                stack.push((nb, 0));
            }
        }
    }
    for b in mol.bonds() {
        if !tree_edge.contains(&(b.u.min(b.v), b.u.max(b.v))) {
            closures[b.u].push((b.v, b.order));
            closures[b.v].push((b.u, b.order));
        }
    }

    let mut writer = Writer {
        mol,
        adj: &adj,
        children: &children,
        closures: &closures,
        written: vec![false; n],
        open_digits: Vec::new(),
        free_digits: BTreeSet::new(),
        next_digit: 1,
        out: String::new(),
    };
    for (i, &root) in roots.iter().enumerate() {
        if i > 0 {
            writer.out.push('.');
        }
        writer.visit(root);
    }
    writer.out
}

struct Writer<'a> {
    mol: &'a MolecularGraph,
    adj: &'a [Vec<(usize, BondOrder)>],
    children: &'a [Vec<(usize, BondOrder)>],
    closures: &'a [Vec<(usize, BondOrder)>],
    written: Vec<bool>,
    /// (digit, opening atom, closing atom) for rings waiting to close.
    open_digits: Vec<(u32, usize, usize)>,
    free_digits: BTreeSet<u32>,
    next_digit: u32,
    out: String,
}

impl Writer<'_> {
    fn visit(&mut self, atom: usize) {
        let a = &self.mol.atoms()[atom];
        let incident: Vec<BondOrder> = self.adj[atom].iter().map(|&(_, o)| o).collect();
        self.out.push_str(&atom_token(a, &incident));
        self.written[atom] = true;

        for &(other, order) in &self.closures[atom] {
            if self.written[other] {
                let pos = self
                    .open_digits
                    .iter()
                    .position(|&(_, from, to)| from == other && to == atom)
                    .expect("ring opened at an earlier atom");
                let (digit, _, _) = self.open_digits.remove(pos);
                push_digit(&mut self.out, digit);
                self.free_digits.insert(digit);
            } else {
                let digit = match self.free_digits.pop_first() {
                    Some(d) => d,
                    None => {
                        self.next_digit += 1;
                        self.next_digit - 1
                    }
                };
                let other_aromatic = self.mol.atoms()[other].aromatic;
                self.out.push_str(bond_token(order, a.aromatic, other_aromatic));
                push_digit(&mut self.out, digit);
                self.open_digits.push((digit, atom, other));
            }
        }

        let kids = &self.children[atom];
        for (i, &(child, order)) in kids.iter().enumerate() {
            let branch = i + 1 < kids.len();
            if branch {
                self.out.push('(');
            }
            let child_aromatic = self.mol.atoms()[child].aromatic;
            self.out.push_str(bond_token(order, a.aromatic, child_aromatic));
            self.visit(child);
            if branch {
                self.out.push(')');
            }
        }
    }
}

fn push_digit(out: &mut String, digit: u32) {
    if digit < 10 {
        write!(out, "{digit}").unwrap();
    } else {
        write!(out, "%{digit:02}").unwrap();
    }
}

fn bond_token(order: BondOrder, a_aromatic: bool, b_aromatic: bool) -> &'static str {
    match order {
        BondOrder::Single if a_aromatic && b_aromatic => "-",
        BondOrder::Single | BondOrder::Aromatic => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn atom_token(atom: &Atom, incident: &[BondOrder]) -> String {
    let organic = atom.element.is_organic_subset()
        && atom.formal_charge == 0
        && atom.radical_electrons == 0
        && (!atom.aromatic || atom.element.can_be_aromatic())
        && default_hydrogens(&atom.element, atom.aromatic, incident) == Some(atom.implicit_h);
    let symbol = if atom.aromatic {
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    if organic {
        return symbol;
    }
    let mut s = format!("[{symbol}");
    match atom.implicit_h {
        0 => {}
        1 => s.push('H'),
        h => write!(s, "H{h}").unwrap(),
    }
    match atom.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        q if q > 0 => write!(s, "+{q}").unwrap(),
        q => write!(s, "-{}", -q).unwrap(),
    }
    s.push(']');
    s
}
