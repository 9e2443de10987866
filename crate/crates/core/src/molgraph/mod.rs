//! Molecular graphs: atoms, bonds, SMILES and JSON ingestion, hydrogen
//! expansion, ring perception and the mirror (reflection) operation.
//!
//! Chirality tags are always stored relative to the ascending order of the
//! centre's neighbour ids: looking from the lowest-id neighbour, the other
//! three (ascending) run clockwise (`Cw`) or counterclockwise (`Ccw`).
//! Implicit hydrogens that have not been expanded yet sort after every
//! explicit neighbour, which is exactly where [`expand_hydrogens`] puts them.

mod element;
mod hydrogens;
mod json;
mod rings;
mod smiles;

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use element::Element;
pub use hydrogens::expand_hydrogens;
pub use json::{load_graph_json, parse_graph_json, to_graph_json, GraphJson, JsonLoadError, Strictness, GRAPH_JSON_VERSION};
pub use rings::detect_rings;
pub use smiles::{parse_smiles, write_smiles, SmilesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum Chirality {
    #[default]
    None,
    Cw,
    Ccw,
}

impl Chirality {
    pub fn flipped(self) -> Self {
        match self {
            Chirality::None => Chirality::None,
            Chirality::Cw => Chirality::Ccw,
            Chirality::Ccw => Chirality::Cw,
        }
    }

    /// Flip when `odd` is set; used after permuting a neighbour list.
    pub fn flip_if(self, odd: bool) -> Self {
        if odd {
            self.flipped()
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Valence slots consumed by the bond. Aromatic bonds count one slot;
    /// the delocalised electron is accounted for per atom.
    pub fn valence_slots(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub id: usize,
    pub element: Element,
    pub atomic_mass: f64,
    pub formal_charge: i8,
    pub partial_charge: Option<f64>,
    pub chirality: Chirality,
    /// Written in lowercase aromatic notation.
    pub aromatic: bool,
    /// Hydrogens implied by the valence model but not yet present as atoms.
    pub implicit_hydrogens: u8,
    /// Endpoint of some ring bond. Maintained by [`detect_rings`].
    pub ring_member: bool,
}

impl Atom {
    pub fn new(id: usize, element: Element) -> Self {
        Atom {
            id,
            element,
            atomic_mass: element.atomic_mass(),
            formal_charge: 0,
            partial_charge: None,
            chirality: Chirality::None,
            aromatic: false,
            implicit_hydrogens: 0,
            ring_member: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    /// Smaller endpoint.
    pub a: usize,
    /// Larger endpoint.
    pub b: usize,
    pub order: BondOrder,
    pub in_ring: bool,
}

impl Bond {
    pub fn new(u: usize, v: usize, order: BondOrder) -> Self {
        Bond {
            a: u.min(v),
            b: u.max(v),
            order,
            in_ring: false,
        }
    }

    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("atom at position {position} has id {id}; ids must be 0..n-1 in order")]
    NonContiguousIds { position: usize, id: usize },
    #[error("bond {index} references atom {atom}, but the graph has {n} atoms")]
    UnknownAtom { index: usize, atom: usize, n: usize },
    #[error("bond {index} is a self-loop on atom {atom}")]
    SelfLoop { index: usize, atom: usize },
    #[error("duplicate bond between atoms {a} and {b}")]
    DuplicateBond { a: usize, b: usize },
    #[error("atom {atom} carries a chirality tag but has {degree} neighbours (needs 4)")]
    ChiralityDegree { atom: usize, degree: usize },
    #[error("atom {atom} ({element}) uses {used} valence slots; allowed {allowed:?}")]
    ValenceExceeded {
        atom: usize,
        element: Element,
        used: u32,
        allowed: Vec<u8>,
    },
    #[error("atom {atom} mass {mass} does not match the table value for {element}")]
    MassMismatch { atom: usize, element: Element, mass: f64 },
    #[error("graph has no atoms")]
    Empty,
    #[error("relabeling is not a permutation of 0..{0}")]
    BadPermutation(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularGraph {
    pub name: String,
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
}

impl MolecularGraph {
    /// Builds a graph, checks every invariant and recomputes ring flags.
    pub fn new(name: impl Into<String>, atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        let g = MolecularGraph {
            name: name.into(),
            atoms,
            bonds,
        };
        g.validate()?;
        Ok(detect_rings(g))
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.atoms.len();
        for (position, atom) in self.atoms.iter().enumerate() {
            if atom.id != position {
                return Err(GraphError::NonContiguousIds { position, id: atom.id });
            }
            if atom.atomic_mass != atom.element.atomic_mass() {
                return Err(GraphError::MassMismatch {
                    atom: position,
                    element: atom.element,
                    mass: atom.atomic_mass,
                });
            }
        }
        let mut seen = HashSet::with_capacity(self.bonds.len());
        for (index, bond) in self.bonds.iter().enumerate() {
            for atom in [bond.a, bond.b] {
                if atom >= n {
                    return Err(GraphError::UnknownAtom { index, atom, n });
                }
            }
            if bond.a == bond.b {
                return Err(GraphError::SelfLoop { index, atom: bond.a });
            }
            let key = (bond.a.min(bond.b), bond.a.max(bond.b));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateBond { a: key.0, b: key.1 });
            }
        }
        let adj = self.adjacency();
        for atom in &self.atoms {
            let degree = adj[atom.id].len() + atom.implicit_hydrogens as usize;
            if atom.chirality != Chirality::None && degree != 4 {
                return Err(GraphError::ChiralityDegree { atom: atom.id, degree });
            }
            let used = self.valence_used(atom.id);
            let allowed = atom.element.valences(atom.formal_charge);
            if allowed.iter().all(|&v| used > v as u32) {
                return Err(GraphError::ValenceExceeded {
                    atom: atom.id,
                    element: atom.element,
                    used,
                    allowed,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Sorted neighbour lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for b in &self.bonds {
            if b.a < adj.len() && b.b < adj.len() {
                adj[b.a].push(b.b);
                adj[b.b].push(b.a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Bonds incident to each atom, as indices into `bonds`.
    pub fn incident_bonds(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            inc[b.a].push(i);
            inc[b.b].push(i);
        }
        inc
    }

    /// Explicit neighbours plus implicit hydrogens.
    pub fn degree(&self, v: usize) -> usize {
        self.bonds.iter().filter(|b| b.a == v || b.b == v).count()
            + self.atoms[v].implicit_hydrogens as usize
    }

    /// Valence slots used by bonds and implicit hydrogens.
    pub fn valence_used(&self, v: usize) -> u32 {
        self.bonds
            .iter()
            .filter(|b| b.a == v || b.b == v)
            .map(|b| b.order.valence_slots())
            .sum::<u32>()
            + self.atoms[v].implicit_hydrogens as u32
    }

    pub fn has_partial_charges(&self) -> bool {
        self.atoms.iter().all(|a| a.partial_charge.is_some())
    }

    pub fn stereocenters(&self) -> usize {
        self.atoms.iter().filter(|a| a.chirality != Chirality::None).count()
    }

    /// Connected components as sorted vertex lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Salts and mixtures are accepted; this is the warning flag.
    pub fn is_disconnected(&self) -> bool {
        self.components().len() > 1
    }

    /// Reflection: every CW tag becomes CCW and vice versa.
    pub fn mirror(&self) -> MolecularGraph {
        let mut g = self.clone();
        for atom in &mut g.atoms {
            atom.chirality = atom.chirality.flipped();
        }
        g
    }

    /// Renumbers atoms so that old atom `i` becomes `perm[i]`.
    ///
    /// Chirality tags are re-normalised so the described configuration is
    /// unchanged; bonds are re-sorted by `(a, b)`.
    pub fn relabel(&self, perm: &[usize]) -> Result<MolecularGraph, GraphError> {
        let n = self.atoms.len();
        if perm.len() != n || perm.iter().copied().collect::<BTreeSet<_>>().len() != n || perm.iter().any(|&p| p >= n) {
            return Err(GraphError::BadPermutation(n));
        }
        let adj = self.adjacency();
        let mut atoms: Vec<Option<Atom>> = vec![None; n];
        for atom in &self.atoms {
            let mut a = atom.clone();
            a.id = perm[atom.id];
            if a.chirality != Chirality::None {
                let mapped: Vec<usize> = adj[atom.id].iter().map(|&w| perm[w]).collect();
                a.chirality = a.chirality.flip_if(permutation_is_odd(&mapped));
            }
            let slot = a.id;
            atoms[slot] = Some(a);
        }
        let atoms: Vec<Atom> = atoms.into_iter().map(|a| a.expect("permutation is total")).collect();
        let mut bonds: Vec<Bond> = self
            .bonds
            .iter()
            .map(|b| {
                let mut nb = Bond::new(perm[b.a], perm[b.b], b.order);
                nb.in_ring = b.in_ring;
                nb
            })
            .collect();
        bonds.sort_by_key(|b| (b.a, b.b));
        Ok(MolecularGraph {
            name: self.name.clone(),
            atoms,
            bonds,
        })
    }

    /// Same graph with bonds sorted by endpoints; used for structural equality.
    pub fn canonical_bond_order(&self) -> MolecularGraph {
        let mut g = self.clone();
        g.bonds.sort_by_key(|b| (b.a, b.b));
        g
    }
}

/// Parity of the permutation that sorts `seq` (distinct values).
pub(crate) fn permutation_is_odd(seq: &[usize]) -> bool {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}
