//! Browser bindings for the demo page in `www/`. Each export takes SMILES
//! (or molecule JSON) and returns a JSON string for the page to draw.

use mpph::filtration::{FiltrationKind, FiltrationSpec};
use mpph::homology::HomologyConfig;
use mpph::metrics::{compare_pair, MatchingDistanceReport};
use mpph::molgraph::{expand_hydrogens, parse_graph_json, parse_smiles, MolecularGraph, Strictness};
use mpph::vectorize::{assemble, auto_k_grid, diagram_records, DiagramRecord};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// SMILES, or a molecule JSON object when the text starts with `{`.
pub fn molecule(text: &str) -> Result<MolecularGraph, String> {
    let text = text.trim();
    if text.starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        parse_graph_json(&v, Strictness::Lenient).map_err(|e| e.to_string())
    } else {
        parse_smiles(text).map_err(|e| e.to_string())
    }
}

/// Every kind the molecules support: partial charges only when all have them.
fn specs_for(graphs: &[&MolecularGraph]) -> Vec<FiltrationSpec> {
    FiltrationKind::ALL
        .into_iter()
        .filter(|&k| k != FiltrationKind::PartialCharge || graphs.iter().all(|g| g.has_partial_charges()))
        .map(FiltrationSpec::new)
        .collect()
}

fn grid_for(graphs: &[&MolecularGraph]) -> u32 {
    auto_k_grid(graphs.iter().copied()).max(1)
}

#[derive(Debug, Serialize)]
pub struct CurveRow {
    pub kind: FiltrationKind,
    pub level: usize,
    pub dim: u8,
    pub curve: Vec<u32>,
}

#[derive(Debug, Serialize)]
pub struct FingerprintView {
    pub atoms: usize,
    pub heavy_atoms: usize,
    pub stereocenters: usize,
    pub k_grid: u32,
    pub kinds: Vec<FiltrationKind>,
    pub rows: Vec<CurveRow>,
}

pub fn fingerprint_view(text: &str) -> Result<FingerprintView, String> {
    let g = molecule(text)?;
    let specs = specs_for(&[&g]);
    let k = grid_for(&[&g]);
    let fp = assemble("input", &g, &specs, k, &HomologyConfig::default()).map_err(|e| e.to_string())?;
    let width = k as usize + 1;
    let mut chunks = fp.values.chunks(width);
    let mut rows = Vec::new();
    for &kind in &fp.layout.kinds {
        for dim in 0..2 {
            for level in 1..=kind.levels() {
                let curve = chunks.next().ok_or("fingerprint shorter than its layout")?.to_vec();
                rows.push(CurveRow { kind, level, dim, curve });
            }
        }
    }
    Ok(FingerprintView {
        atoms: expand_hydrogens(&g).atoms.len(),
        heavy_atoms: g.atoms.iter().filter(|a| a.element.symbol() != "H").count(),
        stereocenters: g.stereocenters(),
        k_grid: k,
        kinds: fp.layout.kinds.clone(),
        rows,
    })
}

/// Row diagrams of one filtration kind.
pub fn diagrams_view(text: &str, kind: &str) -> Result<Vec<DiagramRecord>, String> {
    let g = molecule(text)?;
    let kind: FiltrationKind = kind.parse()?;
    let k = grid_for(&[&g]);
    diagram_records("input", &g, &[FiltrationSpec::new(kind)], k, &HomologyConfig::default()).map_err(|e| e.to_string())
}

pub fn compare_view(a: &str, b: &str, p: f64) -> Result<MatchingDistanceReport, String> {
    if !(p >= 1.0) {
        return Err("p must be at least 1".into());
    }
    let (ga, gb) = (molecule(a)?, molecule(b)?);
    let specs = specs_for(&[&ga, &gb]);
    let k = grid_for(&[&ga, &gb]);
    compare_pair("pair", &ga, &gb, &specs, k, &HomologyConfig::default(), p).map_err(|e| e.to_string())
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("serializable")).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fingerprint(text: &str) -> Result<String, JsError> {
    to_js(fingerprint_view(text))
}

#[wasm_bindgen]
pub fn diagrams(text: &str, kind: &str) -> Result<String, JsError> {
    to_js(diagrams_view(text, kind))
}

#[wasm_bindgen]
pub fn compare(a: &str, b: &str, p: f64) -> Result<String, JsError> {
    to_js(compare_view(a, b, p))
}
