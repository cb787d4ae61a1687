use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chem::MolecularGraph;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the little-endian bytes of `words`, followed by a
/// splitmix64 finalizer. Identical on every platform.
pub fn stable_hash(words: &[u64]) -> u64 {
    let mut h = FNV_OFFSET;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

fn symbol_word(symbol: &str) -> u64 {
    let mut bytes = [0u8; 8];
    for (dst, src) in bytes.iter_mut().zip(symbol.bytes()) {
        *dst = src;
    }
    u64::from_le_bytes(bytes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub counts: Vec<u32>,
    pub radius: usize,
}

impl Fingerprint {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// One circular environment: `atom` and everything within `radius` bonds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub atom: usize,
    pub radius: usize,
    pub id: u64,
    /// Sorted indices of the bonds the environment covers.
    pub bonds: Vec<usize>,
}

/// Every atom's environment at every radius up to `radius`, radius-major.
pub fn morgan_environments(mol: &MolecularGraph, radius: usize) -> Vec<Environment> {
    let n = mol.atom_count();
    let adj = mol.adjacency();
    let bond_index = |u: usize, v: usize| {
        mol.bonds()
            .iter()
            .position(|b| (b.u == u && b.v == v) || (b.u == v && b.v == u))
            .expect("adjacent atoms share a bond")
    };
    let nbr_bonds: Vec<Vec<usize>> = (0..n)
        .map(|a| adj[a].iter().map(|&(nb, _)| bond_index(a, nb)).collect())
        .collect();

    let mut ids: Vec<u64> = mol
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            stable_hash(&[
                symbol_word(a.element.symbol()),
                a.formal_charge as i64 as u64,
                u64::from(a.aromatic),
                u64::from(a.implicit_h),
                adj[i].len() as u64,
            ])
        })
        .collect();
    let mut covered: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut out: Vec<Environment> = (0..n)
        .map(|atom| Environment {
            atom,
            radius: 0,
            id: ids[atom],
            bonds: Vec::new(),
        })
        .collect();
    for r in 1..=radius {
        let mut next_ids = Vec::with_capacity(n);
        let mut next_covered = Vec::with_capacity(n);
        for a in 0..n {
            let mut pairs: Vec<(u64, u64)> = adj[a]
                .iter()
                .map(|&(nb, order)| (u64::from(order.code()), ids[nb]))
                .collect();
            pairs.sort_unstable();
            let mut words = vec![ids[a]];
            for (code, id) in pairs {
                words.push(code);
                words.push(id);
            }
            next_ids.push(stable_hash(&words));
            let mut bonds = covered[a].clone();
            for (&(nb, _), &b) in adj[a].iter().zip(&nbr_bonds[a]) {
                bonds.insert(b);
                bonds.extend(covered[nb].iter().copied());
            }
            next_covered.push(bonds);
        }
        out.extend((0..n).map(|atom| Environment {
            atom,
            radius: r,
            id: next_ids[atom],
            bonds: next_covered[atom].iter().copied().collect(),
        }));
        ids = next_ids;
        covered = next_covered;
    }
    out
}

/// Identifiers of every retained circular environment, radius 0 first.
///
/// Every atom contributes its radius-0 identifier. At radius `r ≥ 1` an
/// atom's environment is kept only if the set of bonds it covers has not
/// been seen at a smaller radius or earlier at this radius (ties ordered by
/// bond set, then identifier).
pub fn morgan_identifiers(mol: &MolecularGraph, radius: usize) -> Vec<u64> {
    let envs = morgan_environments(mol, radius);
    let mut out: Vec<u64> = envs.iter().filter(|e| e.radius == 0).map(|e| e.id).collect();
    let mut seen: BTreeSet<&[usize]> = BTreeSet::new();
    seen.insert(&[]);
    for r in 1..=radius {
        let mut candidates: Vec<(&[usize], u64)> = envs
            .iter()
            .filter(|e| e.radius == r)
            .map(|e| (e.bonds.as_slice(), e.id))
            .collect();
        candidates.sort();
        for (bonds, id) in candidates {
            if seen.insert(bonds) {
                out.push(id);
            }
        }
    }
    out
}

/// Count fingerprint: retained identifiers folded modulo `bits`.
pub fn morgan_fingerprint(mol: &MolecularGraph, radius: usize, bits: usize) -> Fingerprint {
    assert!(bits > 0, "fingerprint length must be positive");
    let mut counts = vec![0u32; bits];
    for id in morgan_identifiers(mol, radius) {
        counts[(id % bits as u64) as usize] += 1;
    }
    Fingerprint { counts, radius }
}
