//! Wasserstein distances between diagrams and the stability diagnostics
//! built on them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filtration::FiltrationSpec;
use crate::homology::{HomologyConfig, PersistenceDiagram};
use crate::molgraph::MolecularGraph;
use crate::vectorize::{assemble, molecule_diagrams, MpphFingerprint, VectorizeError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("row counts differ: {0} vs {1}")]
    RowCount(usize, usize),
    #[error("p must be at least 1, got {0}")]
    BadOrder(f64),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
}

/// Real-valued diagram: finite points and births of essential classes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagram {
    pub points: Vec<(f64, f64)>,
    pub essentials: Vec<f64>,
}

impl From<&PersistenceDiagram> for Diagram {
    fn from(pd: &PersistenceDiagram) -> Self {
        Diagram {
            points: pd.pairs.iter().map(|&(b, d)| (f64::from(b), f64::from(d))).collect(),
            essentials: pd.essentials.iter().map(|&b| f64::from(b)).collect(),
        }
    }
}

/// Minimum-cost perfect assignment on a square matrix. Returns the column
/// assigned to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // Potentials formulation with 1-based sentinel row/column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut owner = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[owner[j] - 1] = j - 1;
    }
    assignment
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// Distance from a point to the diagonal in the sup norm.
fn to_diagonal(a: (f64, f64)) -> f64 {
    (a.1 - a.0) / 2.0
}

/// Diagonal-augmented cost matrix: rows are the points of `a` then one
/// diagonal slot per point of `b`; columns likewise.
pub fn augmented_costs(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> Vec<Vec<f64>> {
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = match (i < na, j < nb) {
                (true, true) => linf(a[i], b[j]).powf(p),
                (true, false) => to_diagonal(a[i]).powf(p),
                (false, true) => to_diagonal(b[j]).powf(p),
                (false, false) => 0.0,
            };
        }
    }
    m
}

/// `p`-th power of the Wasserstein distance, infinite when the essential
/// counts differ.
pub fn wasserstein_cost(a: &Diagram, b: &Diagram, p: f64) -> f64 {
    if a.essentials.len() != b.essentials.len() {
        return f64::INFINITY;
    }
    let mut ea = a.essentials.clone();
    let mut eb = b.essentials.clone();
    ea.sort_by(f64::total_cmp);
    eb.sort_by(f64::total_cmp);
    let essential: f64 = ea.iter().zip(&eb).map(|(x, y)| (x - y).abs().powf(p)).sum();
    let cost = augmented_costs(&a.points, &b.points, p);
    let assignment = hungarian(&cost);
    let finite: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    finite + essential
}

/// `p`-Wasserstein distance; `f64::INFINITY` flags unequal essential counts.
pub fn wasserstein(a: &Diagram, b: &Diagram, p: f64) -> f64 {
    let c = wasserstein_cost(a, b, p);
    if c.is_infinite() || p == 1.0 {
        c
    } else {
        c.powf(1.0 / p)
    }
}

pub fn wasserstein_pd(a: &PersistenceDiagram, b: &PersistenceDiagram, p: f64) -> f64 {
    wasserstein(&Diagram::from(a), &Diagram::from(b), p)
}

/// Sum of row-by-row Wasserstein distances.
pub fn induced_distance(rows_a: &[PersistenceDiagram], rows_b: &[PersistenceDiagram], p: f64) -> Result<f64, MetricsError> {
    if p < 1.0 || p.is_nan() {
        return Err(MetricsError::BadOrder(p));
    }
    if rows_a.len() != rows_b.len() {
        return Err(MetricsError::RowCount(rows_a.len(), rows_b.len()));
    }
    Ok(rows_a.iter().zip(rows_b).map(|(a, b)| wasserstein_pd(a, b, p)).sum())
}

/// L1 distance between fingerprints of the same layout: the sum over rows of
/// the L1 distance between Betti curves.
pub fn fingerprint_distance(a: &MpphFingerprint, b: &MpphFingerprint) -> Result<f64, MetricsError> {
    a.layout.ensure_same(&b.layout)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| f64::from(x.abs_diff(y)))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingDistanceReport {
    pub id: String,
    pub p: f64,
    /// One entry per (kind, level, dimension), in fingerprint layout order.
    pub row_distances: Vec<f64>,
    pub induced: f64,
    pub fingerprint: f64,
    /// `fingerprint / induced`, absent when `induced` is zero or infinite.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub reports: Vec<MatchingDistanceReport>,
    pub max_ratio: Option<f64>,
}

fn layout_rows(blocks: Vec<(crate::filtration::FiltrationKind, Vec<crate::homology::RowDiagrams>)>) -> Vec<PersistenceDiagram> {
    let mut out = Vec::new();
    for (_, rows) in blocks {
        out.extend(rows.iter().map(|r| r.h0.clone()));
        out.extend(rows.iter().map(|r| r.h1.clone()));
    }
    out
}

/// Compares the two molecules of a pair at both the diagram and the
/// fingerprint level.
pub fn compare_pair(
    id: &str,
    a: &MolecularGraph,
    b: &MolecularGraph,
    specs: &[FiltrationSpec],
    k_grid: u32,
    cfg: &HomologyConfig,
    p: f64,
) -> Result<MatchingDistanceReport, MetricsError> {
    let fa = assemble(id, a, specs, k_grid, cfg)?;
    let fb = assemble(id, b, specs, k_grid, cfg)?;
    let mut ordered = specs.to_vec();
    ordered.sort_by_key(|s| fa.layout.kinds.iter().position(|&k| k == s.kind));
    let ra = layout_rows(molecule_diagrams(a, &ordered, k_grid, cfg)?);
    let rb = layout_rows(molecule_diagrams(b, &ordered, k_grid, cfg)?);
    if ra.len() != rb.len() {
        return Err(MetricsError::RowCount(ra.len(), rb.len()));
    }
    let row_distances: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| wasserstein_pd(x, y, p)).collect();
    let induced: f64 = row_distances.iter().sum();
    let fingerprint = fingerprint_distance(&fa, &fb)?;
    let ratio = (induced > 0.0 && induced.is_finite()).then(|| fingerprint / induced);
    Ok(MatchingDistanceReport {
        id: id.to_string(),
        p,
        row_distances,
        induced,
        fingerprint,
        ratio,
    })
}

/// Runs [`compare_pair`] on every pair and reports the largest ratio seen.
pub fn stability_probe(
    pairs: &[(String, MolecularGraph, MolecularGraph)],
    specs: &[FiltrationSpec],
    k_grid: u32,
    cfg: &HomologyConfig,
    p: f64,
) -> Result<StabilitySummary, MetricsError> {
    use rayon::prelude::*;
    let reports = pairs
        .par_iter()
        .map(|(id, a, b)| compare_pair(id, a, b, specs, k_grid, cfg, p))
        .collect::<Result<Vec<_>, _>>()?;
    let max_ratio = reports.iter().filter_map(|r| r.ratio).reduce(f64::max);
    Ok(StabilitySummary { reports, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(points: &[(f64, f64)]) -> Diagram {
        Diagram {
            points: points.to_vec(),
            essentials: vec![],
        }
    }

    #[test]
    fn identical_is_zero() {
        let a = d(&[(0.0, 2.0), (1.0, 3.0)]);
        assert_eq!(wasserstein(&a, &a, 1.0), 0.0);
        assert_eq!(wasserstein(&a, &a, 2.0), 0.0);
    }

    #[test]
    fn single_point_to_empty() {
        assert_eq!(wasserstein(&d(&[(0.0, 2.0)]), &d(&[]), 1.0), 1.0);
    }

    #[test]
    fn direct_match_beats_diagonal() {
        assert_eq!(wasserstein(&d(&[(0.0, 1.0)]), &d(&[(0.0, 2.0)]), 1.0), 1.0);
    }

    #[test]
    fn essential_mismatch_is_infinite() {
        let a = Diagram {
            points: vec![],
            essentials: vec![0.0],
        };
        assert!(wasserstein(&a, &d(&[]), 1.0).is_infinite());
        let b = Diagram {
            points: vec![],
            essentials: vec![2.0],
        };
        assert_eq!(wasserstein(&a, &b, 1.0), 2.0);
    }

    #[test]
    fn hungarian_small() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&c);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn induced_sums_rows() {
        let zero = PersistenceDiagram::from_parts(1, 4, vec![], vec![]);
        let one = PersistenceDiagram::from_parts(1, 4, vec![(0, 2)], vec![]);
        let a = vec![zero.clone(), zero.clone(), zero.clone()];
        let b = vec![zero.clone(), one, zero.clone()];
        assert_eq!(induced_distance(&a, &a, 1.0).unwrap(), 0.0);
        assert_eq!(induced_distance(&a, &b, 1.0).unwrap(), 1.0);
        assert!(matches!(induced_distance(&a, &b[..2], 1.0), Err(MetricsError::RowCount(3, 2))));
        assert!(induced_distance(&a, &b, 0.5).is_err());
    }
}
