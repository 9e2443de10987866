//! Sublevel vertex filtrations: each kind assigns atoms a value and a fixed
//! ladder of thresholds, and level `i` keeps every atom whose value is at
//! most the `i`-th threshold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{Atom, BondOrder, Chirality, Element, MolecularGraph};

/// Element ladder for the atomic-mass filtration, lightest first.
pub const MASS_LADDER: [Element; 10] = [
    Element::H,
    Element::C,
    Element::N,
    Element::O,
    Element::F,
    Element::P,
    Element::S,
    Element::Cl,
    Element::Br,
    Element::I,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FiltrationKind {
    #[serde(rename = "AM")]
    AtomicMass,
    #[serde(rename = "PC")]
    PartialCharge,
    #[serde(rename = "BT")]
    BondType,
    #[serde(rename = "CH")]
    Chirality,
}

impl FiltrationKind {
    /// Fingerprint block order.
    pub const ALL: [FiltrationKind; 4] = [
        FiltrationKind::AtomicMass,
        FiltrationKind::PartialCharge,
        FiltrationKind::BondType,
        FiltrationKind::Chirality,
    ];

    pub fn levels(self) -> usize {
        match self {
            FiltrationKind::AtomicMass | FiltrationKind::PartialCharge => 10,
            FiltrationKind::BondType => 4,
            FiltrationKind::Chirality => 3,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            FiltrationKind::AtomicMass => "AM",
            FiltrationKind::PartialCharge => "PC",
            FiltrationKind::BondType => "BT",
            FiltrationKind::Chirality => "CH",
        }
    }
}

impl fmt::Display for FiltrationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for FiltrationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AM" | "ATOMIC_MASS" => Ok(FiltrationKind::AtomicMass),
            "PC" | "PARTIAL_CHARGE" => Ok(FiltrationKind::PartialCharge),
            "BT" | "BOND_TYPE" => Ok(FiltrationKind::BondType),
            "CH" | "CHIRALITY" => Ok(FiltrationKind::Chirality),
            other => Err(format!("unknown filtration kind '{other}'")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiltrationError {
    #[error("atom {atom} is {element}, which has no level in the atomic-mass ladder")]
    UnsupportedElement { atom: usize, element: Element },
    #[error("partial charges required: atom {atom} has none")]
    ChargesRequired { atom: usize },
    #[error("thresholds for {kind} must be {expected} strictly increasing values, got {got:?}")]
    BadThresholds {
        kind: FiltrationKind,
        expected: usize,
        got: Vec<f64>,
    },
}

/// How partial-charge thresholds are chosen.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecileMode {
    /// Nearest-rank deciles of each molecule's own charges.
    #[default]
    PerMolecule,
    /// One decile grid computed over every charge in the dataset.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiltrationSpec {
    pub kind: FiltrationKind,
    /// Present only for global partial-charge deciles; all other kinds use
    /// fixed ladders.
    #[serde(default)]
    pub global_thresholds: Option<Vec<f64>>,
}

impl FiltrationSpec {
    pub fn new(kind: FiltrationKind) -> Self {
        FiltrationSpec {
            kind,
            global_thresholds: None,
        }
    }

    pub fn global_charges(thresholds: Vec<f64>) -> Result<Self, FiltrationError> {
        check_thresholds(FiltrationKind::PartialCharge, &thresholds)?;
        Ok(FiltrationSpec {
            kind: FiltrationKind::PartialCharge,
            global_thresholds: Some(thresholds),
        })
    }

    pub fn levels(&self) -> usize {
        self.kind.levels()
    }
}

fn check_thresholds(kind: FiltrationKind, t: &[f64]) -> Result<(), FiltrationError> {
    let ok = t.len() == kind.levels() && t.iter().all(|x| x.is_finite()) && t.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(FiltrationError::BadThresholds {
            kind,
            expected: kind.levels(),
            got: t.to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublevelSequence {
    pub kind: FiltrationKind,
    pub thresholds: Vec<f64>,
    /// `subsets[i]` holds the sorted atom ids of level `i + 1`.
    pub subsets: Vec<Vec<usize>>,
}

impl SublevelSequence {
    fn from_values(kind: FiltrationKind, values: &[f64], thresholds: Vec<f64>) -> Self {
        let subsets = thresholds
            .iter()
            .map(|&t| (0..values.len()).filter(|&v| values[v] <= t).collect())
            .collect();
        SublevelSequence {
            kind,
            thresholds,
            subsets,
        }
    }

    pub fn is_nested(&self) -> bool {
        self.subsets
            .windows(2)
            .all(|w| w[0].iter().all(|v| w[1].binary_search(v).is_ok()))
    }
}

/// 0 for no stereo tag or a centre without four neighbours, 1 clockwise, 2 counterclockwise.
pub fn chirality_value(atom: &Atom, degree: usize) -> u8 {
    if degree != 4 {
        return 0;
    }
    match atom.chirality {
        Chirality::None => 0,
        Chirality::Cw => 1,
        Chirality::Ccw => 2,
    }
}

/// Ring members first, then triple, double and finally single-bond atoms.
pub fn bond_type_value(g: &MolecularGraph, atom: usize) -> u8 {
    if g.atoms[atom].ring_member {
        return 0;
    }
    let mut best = 3;
    for b in g.bonds.iter().filter(|b| b.a == atom || b.b == atom) {
        let v = match b.order {
            BondOrder::Triple => 1,
            BondOrder::Double => 2,
            BondOrder::Single | BondOrder::Aromatic => 3,
        };
        best = best.min(v);
    }
    best
}

/// Nearest-rank quantile: the smallest value with at least `q·n` values at or below it.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Decile boundaries of a multiset of charges, nearest-rank method.
pub fn decile_thresholds(charges: &[f64]) -> Vec<f64> {
    let mut sorted = charges.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Integer arithmetic for the rank so that i/10·n never rounds up by accident.
    let n = sorted.len();
    (1..=10).map(|i| sorted[((i * n).div_ceil(10)).clamp(1, n) - 1]).collect()
}

pub fn atomic_mass_sequence(g: &MolecularGraph) -> Result<SublevelSequence, FiltrationError> {
    let mut values = Vec::with_capacity(g.atoms.len());
    for a in &g.atoms {
        if !MASS_LADDER.contains(&a.element) {
            return Err(FiltrationError::UnsupportedElement {
                atom: a.id,
                element: a.element,
            });
        }
        values.push(a.atomic_mass);
    }
    let thresholds = MASS_LADDER.iter().map(|e| e.atomic_mass()).collect();
    Ok(SublevelSequence::from_values(FiltrationKind::AtomicMass, &values, thresholds))
}

pub fn partial_charge_sequence(g: &MolecularGraph, global: Option<&[f64]>) -> Result<SublevelSequence, FiltrationError> {
    let mut values = Vec::with_capacity(g.atoms.len());
    for a in &g.atoms {
        values.push(a.partial_charge.ok_or(FiltrationError::ChargesRequired { atom: a.id })?);
    }
    let thresholds = match global {
        Some(t) => {
            check_thresholds(FiltrationKind::PartialCharge, t)?;
            t.to_vec()
        }
        None if values.is_empty() => vec![0.0; 10],
        None => decile_thresholds(&values),
    };
    Ok(SublevelSequence::from_values(FiltrationKind::PartialCharge, &values, thresholds))
}

pub fn bond_type_sequence(g: &MolecularGraph) -> SublevelSequence {
    let values: Vec<f64> = (0..g.atoms.len()).map(|v| bond_type_value(g, v) as f64).collect();
    SublevelSequence::from_values(FiltrationKind::BondType, &values, vec![0.0, 1.0, 2.0, 3.0])
}

pub fn chirality_sequence(g: &MolecularGraph) -> SublevelSequence {
    let adj = g.adjacency();
    let values: Vec<f64> = g
        .atoms
        .iter()
        .map(|a| chirality_value(a, adj[a.id].len() + a.implicit_hydrogens as usize) as f64)
        .collect();
    SublevelSequence::from_values(FiltrationKind::Chirality, &values, vec![0.0, 1.0, 2.0])
}

/// Nested vertex sequence for one filtration kind.
pub fn build_sequence(g: &MolecularGraph, spec: &FiltrationSpec) -> Result<SublevelSequence, FiltrationError> {
    match spec.kind {
        FiltrationKind::AtomicMass => atomic_mass_sequence(g),
        FiltrationKind::PartialCharge => partial_charge_sequence(g, spec.global_thresholds.as_deref()),
        FiltrationKind::BondType => Ok(bond_type_sequence(g)),
        FiltrationKind::Chirality => Ok(chirality_sequence(g)),
    }
}

/// Dataset-wide decile grid for [`DecileMode::Global`]. Duplicate boundaries
/// are nudged upward to the next representable value so the grid stays
/// strictly increasing.
pub fn global_decile_grid<'a>(graphs: impl IntoIterator<Item = &'a MolecularGraph>) -> Option<Vec<f64>> {
    let charges: Vec<f64> = graphs
        .into_iter()
        .flat_map(|g| g.atoms.iter().filter_map(|a| a.partial_charge))
        .collect();
    if charges.is_empty() {
        return None;
    }
    let mut t = decile_thresholds(&charges);
    for i in 1..t.len() {
        if t[i] <= t[i - 1] {
            t[i] = next_up(t[i - 1]);
        }
    }
    Some(t)
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}
