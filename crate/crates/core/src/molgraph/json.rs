//! JSON molecule files.
//!
//! ```json
//! {"version": 1, "name": "H2",
//!  "atoms": [{"element": "H"}, {"element": "H", "partial_charge": 0.0}],
//!  "bonds": [{"a": 0, "b": 1, "order": "SINGLE"}]}
//! ```
//!
//! `version` is optional and must be [`GRAPH_JSON_VERSION`] when present.
//! Atoms are taken verbatim: hydrogens are whatever the file lists, and a
//! chirality tag is relative to the ascending order of the neighbour ids.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{detect_rings, Atom, Bond, BondOrder, Chirality, Element, GraphError, MolecularGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Unknown keys are an error.
    Strict,
    /// Unknown keys are logged and ignored.
    #[default]
    Lenient,
}

#[derive(Debug, Error)]
pub enum JsonLoadError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {source}")]
    Invariant {
        path: String,
        #[source]
        source: GraphError,
    },
    #[error("invalid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("cannot read {0}: {1}")]
    Io(String, #[source] std::io::Error),
}

pub const GRAPH_JSON_VERSION: u32 = 1;

/// Serialized form of a molecule file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub version: u32,
    pub name: String,
    pub atoms: Vec<AtomJson>,
    pub bonds: Vec<BondJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub element: String,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub formal_charge: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_charge: Option<f64>,
    #[serde(default, skip_serializing_if = "is_none_tag")]
    pub chirality: Chirality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondJson {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

fn is_zero(x: &i8) -> bool {
    *x == 0
}

fn is_none_tag(c: &Chirality) -> bool {
    *c == Chirality::None
}

const TOP_KEYS: &[&str] = &["version", "name", "atoms", "bonds"];
const ATOM_KEYS: &[&str] = &["element", "formal_charge", "partial_charge", "chirality"];
const BOND_KEYS: &[&str] = &["a", "b", "order"];

fn schema(path: impl Into<String>, message: impl Into<String>) -> JsonLoadError {
    JsonLoadError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], path: &str, strictness: Strictness) -> Result<(), JsonLoadError> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            match strictness {
                Strictness::Strict => return Err(schema(format!("{path}.{key}"), "unknown key")),
                Strictness::Lenient => log::warn!("{path}.{key}: unknown key ignored"),
            }
        }
    }
    Ok(())
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, JsonLoadError> {
    v.as_object().ok_or_else(|| schema(path, "expected an object"))
}

/// Parses and validates a molecule from a JSON value.
pub fn parse_graph_json(value: &Value, strictness: Strictness) -> Result<MolecularGraph, JsonLoadError> {
    let top = object(value, "$")?;
    check_keys(top, TOP_KEYS, "$", strictness)?;
    if let Some(v) = top.get("version") {
        if v.as_u64() != Some(u64::from(GRAPH_JSON_VERSION)) {
            return Err(schema("$.version", format!("unsupported version {v}; expected {GRAPH_JSON_VERSION}")));
        }
    }
    let name = match top.get("name") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema("$.name", "expected a string")),
        None => return Err(schema("$.name", "missing")),
    };
    let atoms_v = top
        .get("atoms")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("$.atoms", "expected an array"))?;
    let bonds_v = top
        .get("bonds")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("$.bonds", "expected an array"))?;

    let mut atoms = Vec::with_capacity(atoms_v.len());
    for (i, av) in atoms_v.iter().enumerate() {
        let path = format!("$.atoms[{i}]");
        let obj = object(av, &path)?;
        check_keys(obj, ATOM_KEYS, &path, strictness)?;
        let raw: AtomJson = serde_json::from_value(av.clone()).map_err(|e| schema(&path, e.to_string()))?;
        let element: Element = raw
            .element
            .parse()
            .map_err(|e: String| schema(format!("{path}.element"), e))?;
        if let Some(q) = raw.partial_charge {
            if !q.is_finite() {
                return Err(schema(format!("{path}.partial_charge"), "must be finite"));
            }
        }
        let mut atom = Atom::new(i, element);
        atom.formal_charge = raw.formal_charge;
        atom.partial_charge = raw.partial_charge;
        atom.chirality = raw.chirality;
        atoms.push(atom);
    }

    let mut bonds = Vec::with_capacity(bonds_v.len());
    for (i, bv) in bonds_v.iter().enumerate() {
        let path = format!("$.bonds[{i}]");
        let obj = object(bv, &path)?;
        check_keys(obj, BOND_KEYS, &path, strictness)?;
        let raw: BondJson = serde_json::from_value(bv.clone()).map_err(|e| schema(&path, e.to_string()))?;
        bonds.push(Bond::new(raw.a, raw.b, raw.order));
    }

    let g = MolecularGraph { name, atoms, bonds };
    g.validate().map_err(|source| {
        let path = match &source {
            GraphError::UnknownAtom { index, .. } | GraphError::SelfLoop { index, .. } => format!("$.bonds[{index}]"),
            GraphError::DuplicateBond { a, b } => {
                let idx = g
                    .bonds
                    .iter()
                    .enumerate()
                    .filter(|(_, bd)| bd.a == *a && bd.b == *b)
                    .nth(1)
                    .map_or(0, |(i, _)| i);
                format!("$.bonds[{idx}]")
            }
            GraphError::ChiralityDegree { atom, .. } => format!("$.atoms[{atom}].chirality"),
            GraphError::ValenceExceeded { atom, .. } | GraphError::MassMismatch { atom, .. } => {
                format!("$.atoms[{atom}]")
            }
            _ => "$".to_string(),
        };
        JsonLoadError::Invariant { path, source }
    })?;
    Ok(detect_rings(g))
}

/// Reads a molecule file.
pub fn load_graph_json(path: impl AsRef<Path>, strictness: Strictness) -> Result<MolecularGraph, JsonLoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| JsonLoadError::Io(path.display().to_string(), e))?;
    let value: Value = serde_json::from_str(&text)?;
    parse_graph_json(&value, strictness)
}

/// Explicit-atom JSON view of a graph. Implicit hydrogens should be expanded
/// first; the file format has no field for them.
pub fn to_graph_json(g: &MolecularGraph) -> GraphJson {
    GraphJson {
        version: GRAPH_JSON_VERSION,
        name: g.name.clone(),
        atoms: g
            .atoms
            .iter()
            .map(|a| AtomJson {
                element: a.element.symbol().to_string(),
                formal_charge: a.formal_charge,
                partial_charge: a.partial_charge,
                chirality: a.chirality,
            })
            .collect(),
        bonds: g
            .bonds
            .iter()
            .map(|b| BondJson {
                a: b.a,
                b: b.b,
                order: b.order,
            })
            .collect(),
    }
}
