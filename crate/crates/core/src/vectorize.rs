//! Betti curves and the fixed-length fingerprint.
//!
//! Layout: for each kind in the order AM, PC, BT, CH (only those requested),
//! for each homology dimension 0 then 1, the `levels × (k_grid + 1)` Betti
//! matrix in row-major order. Column `AM_H1_L3_E2` is β₁ of the third
//! atomic-mass level at scale 2.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filtration::{build_sequence, global_decile_grid, DecileMode, FiltrationError, FiltrationKind, FiltrationSpec};
use crate::homology::{geodesic_distances, HomologyConfig, HomologyError, PersistenceDiagram, RowCache, RowDiagrams};
use crate::molgraph::{expand_hydrogens, MolecularGraph};

pub const LAYOUT_VERSION: &str = "mpph-v1";

/// Upper bound on the automatically chosen scale grid.
pub const MAX_AUTO_K_GRID: u32 = 20;

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error(transparent)]
    Filtration(#[from] FiltrationError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error("no filtration kinds requested")]
    NoKinds,
    #[error("filtration kind {0} requested twice")]
    DuplicateKind(FiltrationKind),
    #[error("layout mismatch: expected {expected}, found {found}")]
    LayoutMismatch { expected: String, found: String },
    #[error("every record failed ({0} records)")]
    AllFailed(usize),
    #[error("no records")]
    NoRecords,
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
    #[error("malformed fingerprint file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which blocks a fingerprint holds and on what scale grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub version: String,
    pub kinds: Vec<FiltrationKind>,
    pub k_grid: u32,
}

impl Layout {
    /// Kinds are put in canonical order regardless of how they are given.
    pub fn new(kinds: &[FiltrationKind], k_grid: u32) -> Result<Self, VectorizeError> {
        if kinds.is_empty() {
            return Err(VectorizeError::NoKinds);
        }
        let mut sorted = Vec::with_capacity(kinds.len());
        for kind in FiltrationKind::ALL {
            match kinds.iter().filter(|&&k| k == kind).count() {
                0 => {}
                1 => sorted.push(kind),
                _ => return Err(VectorizeError::DuplicateKind(kind)),
            }
        }
        Ok(Layout {
            version: LAYOUT_VERSION.to_string(),
            kinds: sorted,
            k_grid,
        })
    }

    pub fn columns_per_row(&self) -> usize {
        self.k_grid as usize + 1
    }

    fn block_len(&self, kind: FiltrationKind) -> usize {
        kind.levels() * self.columns_per_row()
    }

    pub fn len(&self) -> usize {
        self.kinds.iter().map(|&k| 2 * self.block_len(k)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index range of one kind's H0 and H1 blocks together.
    pub fn block_range(&self, kind: FiltrationKind) -> Option<std::ops::Range<usize>> {
        let mut start = 0;
        for &k in &self.kinds {
            let len = 2 * self.block_len(k);
            if k == kind {
                return Some(start..start + len);
            }
            start += len;
        }
        None
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.len());
        for &kind in &self.kinds {
            for dim in 0..2 {
                for level in 1..=kind.levels() {
                    for eps in 0..=self.k_grid {
                        names.push(format!("{}_H{dim}_L{level}_E{eps}", kind.code()));
                    }
                }
            }
        }
        names
    }

    pub fn describe(&self) -> String {
        let kinds: Vec<&str> = self.kinds.iter().map(|k| k.code()).collect();
        format!("{} kinds={} k_grid={}", self.version, kinds.join(","), self.k_grid)
    }

    pub fn ensure_same(&self, other: &Layout) -> Result<(), VectorizeError> {
        if self == other {
            Ok(())
        } else {
            Err(VectorizeError::LayoutMismatch {
                expected: self.describe(),
                found: other.describe(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpphFingerprint {
    pub id: String,
    pub layout: Layout,
    pub values: Vec<u32>,
}

/// `β` at every scale `0..=k_grid`; essential classes count at every scale
/// from their birth on.
pub fn betti_curve(pd: &PersistenceDiagram, k_grid: u32) -> Vec<u32> {
    let mut curve = vec![0u32; k_grid as usize + 1];
    let grid_end = k_grid + 1;
    for &(b, d) in &pd.pairs {
        for slot in &mut curve[b.min(grid_end) as usize..d.min(grid_end) as usize] {
            *slot += 1;
        }
    }
    for &b in &pd.essentials {
        for slot in &mut curve[b.min(grid_end) as usize..] {
            *slot += 1;
        }
    }
    curve
}

/// Options shared by every molecule of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FingerprintOptions {
    pub kinds: Vec<FiltrationKind>,
    /// `None` picks the largest diameter in the dataset, capped at
    /// [`MAX_AUTO_K_GRID`].
    pub k_grid: Option<u32>,
    pub decile_mode: DecileMode,
    pub homology: HomologyConfig,
}

impl Default for FingerprintOptions {
    fn default() -> Self {
        FingerprintOptions {
            kinds: FiltrationKind::ALL.to_vec(),
            k_grid: None,
            decile_mode: DecileMode::PerMolecule,
            homology: HomologyConfig::default(),
        }
    }
}

/// Per-row diagrams of one molecule for every requested kind.
pub fn molecule_diagrams(
    g: &MolecularGraph,
    specs: &[FiltrationSpec],
    k_grid: u32,
    cfg: &HomologyConfig,
) -> Result<Vec<(FiltrationKind, Vec<RowDiagrams>)>, VectorizeError> {
    let g = expand_hydrogens(g);
    let full = geodesic_distances(&g)?;
    let mut cache = RowCache::new(&g, full, k_grid, *cfg);
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let seq = build_sequence(&g, spec)?;
        let rows = seq.subsets.iter().map(|row| cache.get(row)).collect::<Result<Vec<_>, _>>()?;
        out.push((spec.kind, rows));
    }
    Ok(out)
}

/// Fingerprint of one molecule. Implicit hydrogens are expanded first.
pub fn assemble(
    id: &str,
    g: &MolecularGraph,
    specs: &[FiltrationSpec],
    k_grid: u32,
    cfg: &HomologyConfig,
) -> Result<MpphFingerprint, VectorizeError> {
    let kinds: Vec<FiltrationKind> = specs.iter().map(|s| s.kind).collect();
    let layout = Layout::new(&kinds, k_grid)?;
    let mut ordered: Vec<&FiltrationSpec> = specs.iter().collect();
    ordered.sort_by_key(|s| layout.kinds.iter().position(|&k| k == s.kind));
    let ordered: Vec<FiltrationSpec> = ordered.into_iter().cloned().collect();
    let blocks = molecule_diagrams(g, &ordered, k_grid, cfg)?;
    let mut values = Vec::with_capacity(layout.len());
    for (_, rows) in &blocks {
        for row in rows {
            values.extend(betti_curve(&row.h0, k_grid));
        }
        for row in rows {
            values.extend(betti_curve(&row.h1, k_grid));
        }
    }
    debug_assert_eq!(values.len(), layout.len());
    Ok(MpphFingerprint {
        id: id.to_string(),
        layout,
        values,
    })
}

/// A record that could not be fingerprinted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFailure {
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintTable {
    pub layout: Layout,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<u32>>,
}

impl FingerprintTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, id: &str) -> Option<&[u32]> {
        self.ids.iter().position(|x| x == id).map(|i| self.rows[i].as_slice())
    }

    /// Rows as `f64` feature vectors.
    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), VectorizeError> {
        let mut w = std::io::BufWriter::new(w);
        writeln!(w, "# {}", self.layout.describe())?;
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string()];
        header.extend(self.layout.column_names());
        out.write_record(&header).map_err(csv_err)?;
        for (id, row) in self.ids.iter().zip(&self.rows) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(id.clone());
            rec.extend(row.iter().map(u32::to_string));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut r: R) -> Result<Self, VectorizeError> {
        let mut first = String::new();
        r.read_line(&mut first)?;
        let layout = parse_describe(first.trim().strip_prefix('#').unwrap_or("").trim())?;
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut expected = vec!["id".to_string()];
        expected.extend(layout.column_names());
        if header != expected {
            return Err(VectorizeError::Format("header does not match the layout line".into()));
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<u32>().map_err(|e| VectorizeError::Format(format!("{v}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(FingerprintTable { layout, ids, rows })
    }

    /// One header object, then one `{"id", "values"}` object per line.
    pub fn write_jsonl<W: Write>(&self, w: W) -> Result<(), VectorizeError> {
        let mut w = std::io::BufWriter::new(w);
        serde_json::to_writer(&mut w, &self.layout).map_err(json_err)?;
        writeln!(w)?;
        for (id, row) in self.ids.iter().zip(&self.rows) {
            serde_json::to_writer(&mut w, &JsonlRow { id: id.clone(), values: row.clone() }).map_err(json_err)?;
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, VectorizeError> {
        let mut lines = r.lines();
        let head = lines.next().ok_or_else(|| VectorizeError::Format("empty file".into()))??;
        let layout: Layout = serde_json::from_str(&head).map_err(json_err)?;
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: JsonlRow = serde_json::from_str(&line).map_err(json_err)?;
            if row.values.len() != layout.len() {
                return Err(VectorizeError::Format(format!("row {} has {} values", row.id, row.values.len())));
            }
            ids.push(row.id);
            rows.push(row.values);
        }
        Ok(FingerprintTable { layout, ids, rows })
    }
}

#[derive(Serialize, Deserialize)]
struct JsonlRow {
    id: String,
    values: Vec<u32>,
}

fn csv_err(e: csv::Error) -> VectorizeError {
    VectorizeError::Format(e.to_string())
}

fn json_err(e: serde_json::Error) -> VectorizeError {
    VectorizeError::Format(e.to_string())
}

fn parse_describe(s: &str) -> Result<Layout, VectorizeError> {
    let bad = || VectorizeError::Format(format!("bad layout line '{s}'"));
    let mut parts = s.split_whitespace();
    let version = parts.next().ok_or_else(bad)?.to_string();
    let kinds = parts.next().and_then(|p| p.strip_prefix("kinds=")).ok_or_else(bad)?;
    let k_grid = parts
        .next()
        .and_then(|p| p.strip_prefix("k_grid="))
        .and_then(|p| p.parse().ok())
        .ok_or_else(bad)?;
    let kinds = kinds
        .split(',')
        .map(|k| k.parse::<FiltrationKind>().map_err(VectorizeError::Format))
        .collect::<Result<Vec<_>, _>>()?;
    let mut layout = Layout::new(&kinds, k_grid)?;
    layout.version = version;
    Ok(layout)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintBatch {
    pub table: FingerprintTable,
    pub failures: Vec<RecordFailure>,
}

/// Largest finite diameter among the (hydrogen-expanded) molecules, capped.
pub fn auto_k_grid<'a>(graphs: impl IntoIterator<Item = &'a MolecularGraph>) -> u32 {
    graphs
        .into_iter()
        .filter_map(|g| geodesic_distances(&expand_hydrogens(g)).ok())
        .map(|d| d.diameter())
        .max()
        .unwrap_or(0)
        .min(MAX_AUTO_K_GRID)
}

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, VectorizeError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| VectorizeError::ThreadPool(e.to_string()))
}

/// Layout and per-kind filtration specs for a dataset: the automatic grid
/// size and, in global-decile mode, the shared charge thresholds.
pub fn resolve_specs(
    records: &[(String, MolecularGraph)],
    opts: &FingerprintOptions,
) -> Result<(Layout, Vec<FiltrationSpec>), VectorizeError> {
    let k_grid = match opts.k_grid {
        Some(k) => k,
        None => {
            let diam: Vec<u32> = records
                .par_iter()
                .filter_map(|(_, g)| geodesic_distances(&expand_hydrogens(g)).ok().map(|d| d.diameter()))
                .collect();
            diam.into_iter().max().unwrap_or(0).min(MAX_AUTO_K_GRID)
        }
    };
    let layout = Layout::new(&opts.kinds, k_grid)?;
    let global = match opts.decile_mode {
        DecileMode::Global if layout.kinds.contains(&FiltrationKind::PartialCharge) => {
            let expanded: Vec<MolecularGraph> = records.iter().map(|(_, g)| expand_hydrogens(g)).collect();
            global_decile_grid(&expanded)
        }
        _ => None,
    };
    let specs = layout
        .kinds
        .iter()
        .map(|&kind| match (&global, kind) {
            (Some(t), FiltrationKind::PartialCharge) => FiltrationSpec::global_charges(t.clone()),
            _ => Ok(FiltrationSpec::new(kind)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((layout, specs))
}

/// Fingerprints every record on `threads` workers. Failed records are
/// reported and skipped; row order follows input order.
pub fn fingerprint_dataset(
    records: &[(String, MolecularGraph)],
    opts: &FingerprintOptions,
    threads: usize,
) -> Result<FingerprintBatch, VectorizeError> {
    if records.is_empty() {
        return Err(VectorizeError::NoRecords);
    }
    let pool = thread_pool(threads)?;
    pool.install(|| {
        let (layout, specs) = resolve_specs(records, opts)?;
        let k_grid = layout.k_grid;
        let results: Vec<Result<MpphFingerprint, String>> = records
            .par_iter()
            .map(|(id, g)| assemble(id, g, &specs, k_grid, &opts.homology).map_err(|e| e.to_string()))
            .collect();
        let mut table = FingerprintTable {
            layout,
            ids: Vec::new(),
            rows: Vec::new(),
        };
        let mut failures = Vec::new();
        for ((id, _), r) in records.iter().zip(results) {
            match r {
                Ok(fp) => {
                    table.ids.push(fp.id);
                    table.rows.push(fp.values);
                }
                Err(message) => {
                    log::warn!("{id}: {message}");
                    failures.push(RecordFailure { id: id.clone(), message });
                }
            }
        }
        if table.is_empty() {
            return Err(VectorizeError::AllFailed(failures.len()));
        }
        Ok(FingerprintBatch { table, failures })
    })
}

/// One line of the diagram dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramRecord {
    pub molecule: String,
    pub param: FiltrationKind,
    pub row: usize,
    pub dim: u8,
    pub pairs: Vec<[u32; 2]>,
    pub essentials: Vec<u32>,
}

/// Every row diagram of a molecule in dump order; `row` is 1-based.
pub fn diagram_records(
    id: &str,
    g: &MolecularGraph,
    specs: &[FiltrationSpec],
    k_grid: u32,
    cfg: &HomologyConfig,
) -> Result<Vec<DiagramRecord>, VectorizeError> {
    let mut out = Vec::new();
    for (kind, rows) in molecule_diagrams(g, specs, k_grid, cfg)? {
        for (i, row) in rows.iter().enumerate() {
            for pd in [&row.h0, &row.h1] {
                out.push(DiagramRecord {
                    molecule: id.to_string(),
                    param: kind,
                    row: i + 1,
                    dim: pd.dim,
                    pairs: pd.pairs.iter().map(|&(b, d)| [b, d]).collect(),
                    essentials: pd.essentials.clone(),
                });
            }
        }
    }
    Ok(out)
}
