//! Vietoris-Rips persistence over hop distances.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filtration::SublevelSequence;
use crate::molgraph::MolecularGraph;

pub mod complex;
pub mod diagram;
pub mod distance;
pub mod reduce;

pub use complex::{build_vr_row, FilteredComplex, Simplex};
pub use diagram::PersistenceDiagram;
pub use distance::{geodesic_distances, induced_distances, DistanceMatrix, UNREACHABLE};
pub use reduce::{h0_union_find, reduce, reduce_row_cohomology};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("graph has no atoms")]
    EmptyGraph,
    #[error("simplex {simplex} has a face that is missing or enters later")]
    FaceClosure { simplex: usize },
    #[error("scale {t} outside grid 0..={max}")]
    OutOfGrid { t: u32, max: u32 },
}

/// Which graph the row distances are measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceSource {
    /// Shortest paths in the whole molecule.
    #[default]
    FullGraph,
    /// Shortest paths inside the subgraph induced by the row's atoms.
    InducedSubgraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionAlgorithm {
    /// Union-find plus edge coboundary reduction.
    #[default]
    Cohomology,
    /// Boundary column algorithm on the materialized complex.
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HomologyConfig {
    #[serde(default)]
    pub distance: DistanceSource,
    #[serde(default)]
    pub algorithm: ReductionAlgorithm,
}

/// H0 and H1 diagrams of one vertex subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagrams {
    pub h0: PersistenceDiagram,
    pub h1: PersistenceDiagram,
}

fn row_with(vertices: &[usize], dist: &DistanceMatrix, max_scale: u32, algorithm: ReductionAlgorithm) -> Result<RowDiagrams, HomologyError> {
    if vertices.is_empty() {
        return Ok(RowDiagrams {
            h0: PersistenceDiagram::empty(0, max_scale),
            h1: PersistenceDiagram::empty(1, max_scale),
        });
    }
    let (h0, h1) = match algorithm {
        ReductionAlgorithm::Cohomology => reduce_row_cohomology(vertices, dist, max_scale),
        ReductionAlgorithm::Standard => reduce(&build_vr_row(vertices, dist, max_scale))?,
    };
    Ok(RowDiagrams { h0, h1 })
}

/// Diagrams for every row of a sublevel sequence. Rows with the same vertex
/// set are computed once.
pub fn sequence_diagrams(
    g: &MolecularGraph,
    seq: &SublevelSequence,
    max_scale: u32,
    cfg: &HomologyConfig,
) -> Result<Vec<RowDiagrams>, HomologyError> {
    let full = geodesic_distances(g)?;
    let mut cache = RowCache::new(g, full, max_scale, *cfg);
    seq.subsets.iter().map(|row| cache.get(row)).collect()
}

/// Per-molecule memo of row diagrams keyed by vertex set.
pub struct RowCache<'a> {
    g: &'a MolecularGraph,
    full: DistanceMatrix,
    max_scale: u32,
    cfg: HomologyConfig,
    memo: HashMap<Vec<usize>, RowDiagrams>,
}

impl<'a> RowCache<'a> {
    pub fn new(g: &'a MolecularGraph, full: DistanceMatrix, max_scale: u32, cfg: HomologyConfig) -> Self {
        RowCache {
            g,
            full,
            max_scale,
            cfg,
            memo: HashMap::new(),
        }
    }

    pub fn get(&mut self, vertices: &[usize]) -> Result<RowDiagrams, HomologyError> {
        let mut key = vertices.to_vec();
        key.sort_unstable();
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let row = match self.cfg.distance {
            DistanceSource::FullGraph => row_with(&key, &self.full, self.max_scale, self.cfg.algorithm)?,
            DistanceSource::InducedSubgraph => {
                let d = induced_distances(self.g, &key);
                row_with(&key, &d, self.max_scale, self.cfg.algorithm)?
            }
        };
        self.memo.insert(key, row.clone());
        Ok(row)
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.full
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{build_sequence, FiltrationKind, FiltrationSpec};
    use crate::molgraph::{expand_hydrogens, parse_smiles};

    #[test]
    fn cache_and_algorithms_agree() {
        let g = expand_hydrogens(&parse_smiles("N[C@@H](Cc1ccccc1)C(=O)O").unwrap());
        for kind in [FiltrationKind::AtomicMass, FiltrationKind::BondType, FiltrationKind::Chirality] {
            let seq = build_sequence(&g, &FiltrationSpec::new(kind)).unwrap();
            for distance in [DistanceSource::FullGraph, DistanceSource::InducedSubgraph] {
                let fast = HomologyConfig {
                    distance,
                    algorithm: ReductionAlgorithm::Cohomology,
                };
                let slow = HomologyConfig {
                    distance,
                    algorithm: ReductionAlgorithm::Standard,
                };
                let a = sequence_diagrams(&g, &seq, 8, &fast).unwrap();
                let b = sequence_diagrams(&g, &seq, 8, &slow).unwrap();
                assert_eq!(a, b);
                assert_eq!(a.len(), kind.levels());
            }
        }
    }

    #[test]
    fn empty_row_gives_empty_diagrams() {
        // Propane has no ring atoms, so the first bond-type row is empty.
        let g = expand_hydrogens(&parse_smiles("CCC").unwrap());
        let seq = build_sequence(&g, &FiltrationSpec::new(FiltrationKind::BondType)).unwrap();
        let rows = sequence_diagrams(&g, &seq, 4, &HomologyConfig::default()).unwrap();
        assert!(rows[0].h0.is_empty() && rows[0].h1.is_empty());
        assert_eq!(rows[3].h0.essentials.len(), 1);
    }

    #[test]
    fn induced_distances_can_split_rows() {
        // Row {0, 2} of propane: joined at scale 2 through the full graph,
        // never joined inside its own induced subgraph.
        let g = parse_smiles("CCC").unwrap();
        let full = geodesic_distances(&g).unwrap();
        let mut a = RowCache::new(&g, full.clone(), 4, HomologyConfig::default());
        let mut b = RowCache::new(
            &g,
            full,
            4,
            HomologyConfig {
                distance: DistanceSource::InducedSubgraph,
                ..Default::default()
            },
        );
        assert_eq!(a.get(&[0, 2]).unwrap().h0.pairs, vec![(0, 2)]);
        assert_eq!(b.get(&[2, 0]).unwrap().h0.essentials.len(), 2);
    }
}
