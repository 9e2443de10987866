use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{HarnessError, Split};
use crate::molgraph::{load_graph_json, parse_graph_json, parse_smiles, MolecularGraph, Strictness};
use crate::vectorize::RecordFailure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    /// Columns `id,smiles,target` (names configurable; `id` optional).
    Csv,
    /// One object per line: `{"id", "target", "graph" | "graph_path", "split"?}`.
    Jsonl,
}

impl DatasetFormat {
    pub fn infer(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(DatasetFormat::Csv),
            "jsonl" | "ndjson" => Some(DatasetFormat::Jsonl),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Smiles(String),
    Graph(PathBuf),
    Inline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub record_id: String,
    pub source: Source,
    /// Absent for unlabeled pools.
    pub target: Option<f64>,
    pub split: Option<Split>,
    pub graph: MolecularGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub format: Option<DatasetFormat>,
    pub id_column: String,
    pub smiles_column: String,
    pub target_column: String,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            path: PathBuf::new(),
            format: None,
            id_column: "id".into(),
            smiles_column: "smiles".into(),
            target_column: "target".into(),
        }
    }
}

impl DatasetConfig {
    /// Default column names, format inferred from the extension.
    pub fn new(path: impl Into<PathBuf>) -> Self {
        DatasetConfig {
            path: path.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub records: Vec<DatasetRecord>,
    pub errors: Vec<RecordFailure>,
}

impl LoadedDataset {
    pub fn graphs(&self) -> Vec<(String, MolecularGraph)> {
        self.records.iter().map(|r| (r.record_id.clone(), r.graph.clone())).collect()
    }
}

/// Reads a dataset. Malformed rows are logged, listed in `errors` and
/// skipped; a dataset with nothing left is an error.
pub fn load_dataset(cfg: &DatasetConfig) -> Result<LoadedDataset, HarnessError> {
    let format = cfg
        .format
        .or_else(|| DatasetFormat::infer(&cfg.path))
        .ok_or_else(|| HarnessError::Config(format!("cannot tell the format of {}", cfg.path.display())))?;
    let file = std::fs::File::open(&cfg.path).map_err(|e| HarnessError::Data(format!("{}: {e}", cfg.path.display())))?;
    let reader = std::io::BufReader::new(file);
    let loaded = match format {
        DatasetFormat::Csv => load_csv(reader, cfg)?,
        DatasetFormat::Jsonl => load_jsonl(reader, cfg.path.parent().unwrap_or(Path::new(".")))?,
    };
    for e in &loaded.errors {
        log::warn!("skipped record {}: {}", e.id, e.message);
    }
    if loaded.records.is_empty() {
        return Err(HarnessError::Data(format!(
            "{}: no usable records ({} skipped)",
            cfg.path.display(),
            loaded.errors.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for r in &loaded.records {
        if !seen.insert(r.record_id.as_str()) {
            return Err(HarnessError::Data(format!("duplicate record id {}", r.record_id)));
        }
    }
    Ok(loaded)
}

fn load_csv<R: BufRead>(reader: R, cfg: &DatasetConfig) -> Result<LoadedDataset, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| HarnessError::Data(e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let id_col = col(&cfg.id_column);
    let smiles_col = col(&cfg.smiles_column)
        .ok_or_else(|| HarnessError::Data(format!("no '{}' column", cfg.smiles_column)))?;
    let target_col = col(&cfg.target_column);
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let fallback = format!("row{}", row + 1);
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                errors.push(RecordFailure { id: fallback, message: e.to_string() });
                continue;
            }
        };
        let id = id_col.and_then(|c| rec.get(c)).map_or(fallback, |s| s.trim().to_string());
        let smiles = rec.get(smiles_col).unwrap_or("").trim().to_string();
        let target = match target_col.map(|c| rec.get(c).unwrap_or("").trim().parse::<f64>()) {
            None => None,
            Some(Ok(t)) if t.is_finite() => Some(t),
            Some(_) => {
                errors.push(RecordFailure { id, message: "missing or invalid target".into() });
                continue;
            }
        };
        match parse_smiles(&smiles) {
            Ok(mut graph) => {
                graph.name = id.clone();
                records.push(DatasetRecord {
                    record_id: id,
                    source: Source::Smiles(smiles),
                    target,
                    split: None,
                    graph,
                });
            }
            Err(e) => errors.push(RecordFailure { id, message: format!("{smiles}: {e}") }),
        }
    }
    Ok(LoadedDataset { records, errors })
}

fn load_jsonl<R: BufRead>(reader: R, base: &Path) -> Result<LoadedDataset, HarnessError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Data(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fallback = format!("line{}", n + 1);
        match parse_jsonl_record(&line, base) {
            Ok(r) => records.push(r),
            Err((id, message)) => errors.push(RecordFailure { id: id.unwrap_or(fallback), message }),
        }
    }
    Ok(LoadedDataset { records, errors })
}

fn parse_jsonl_record(line: &str, base: &Path) -> Result<DatasetRecord, (Option<String>, String)> {
    let v: Value = serde_json::from_str(line).map_err(|e| (None, e.to_string()))?;
    let id = v.get("id").and_then(Value::as_str).map(str::to_string);
    let fail = |m: String| (id.clone(), m);
    let record_id = id.clone().ok_or_else(|| fail("missing id".into()))?;
    let target = match v.get("target") {
        None | Some(Value::Null) => None,
        Some(t) => Some(
            t.as_f64()
                .filter(|t| t.is_finite())
                .ok_or_else(|| fail("invalid target".into()))?,
        ),
    };
    let split = match v.get("split") {
        None | Some(Value::Null) => None,
        Some(s) => Some(serde_json::from_value::<Split>(s.clone()).map_err(|e| fail(e.to_string()))?),
    };
    let (graph, source) = if let Some(g) = v.get("graph") {
        (parse_graph_json(g, Strictness::Lenient).map_err(|e| fail(e.to_string()))?, Source::Inline)
    } else if let Some(p) = v.get("graph_path").and_then(Value::as_str) {
        let path = base.join(p);
        (load_graph_json(&path, Strictness::Lenient).map_err(|e| fail(e.to_string()))?, Source::Graph(path))
    } else {
        return Err(fail("needs 'graph' or 'graph_path'".into()));
    };
    Ok(DatasetRecord {
        record_id,
        source,
        target,
        split,
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    #[test]
    fn csv_with_bad_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "d.csv", "id,smiles,target\na,CCO,-0.5\nb,C1CC,1.0\nc,c1ccccc1,x\nd,O,2\n");
        let d = load_dataset(&DatasetConfig {
            path: p,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(d.records.len(), 2);
        assert_eq!(d.errors.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), vec!["b", "c"]);
    }

    #[test]
    fn csv_custom_columns_and_no_id() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "d.csv", "Compound,logS,SMILES\nx,-1.2,CC\ny,0.3,CN\n");
        let d = load_dataset(&DatasetConfig {
            path: p,
            id_column: "none".into(),
            smiles_column: "SMILES".into(),
            target_column: "logS".into(),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(d.records[1].record_id, "row2");
        assert_eq!(d.records[1].target, Some(0.3));
    }

    #[test]
    fn jsonl_inline_and_path() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "h2.json",
            r#"{"name":"H2","atoms":[{"element":"H"},{"element":"H"}],"bonds":[{"a":0,"b":1,"order":"SINGLE"}]}"#,
        );
        let text = concat!(
            r#"{"id":"p","target":1.5,"graph_path":"h2.json","split":"TEST"}"#,
            "\n",
            r#"{"id":"q","target":2.0,"graph":{"name":"O","atoms":[{"element":"O"}],"bonds":[]}}"#,
            "\n",
            r#"{"id":"r","target":"x","graph":{"name":"O","atoms":[{"element":"O"}],"bonds":[]}}"#,
            "\n"
        );
        let p = write(dir.path(), "d.jsonl", text);
        let d = load_dataset(&DatasetConfig {
            path: p,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(d.records.len(), 2);
        assert_eq!(d.records[0].split, Some(Split::Test));
        assert_eq!(d.records[0].graph.atoms.len(), 2);
        assert_eq!(d.errors[0].id, "r");
    }

    #[test]
    fn unlabeled_pool() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "pool.csv", "id,smiles\na,CCO\nb,CCN\n");
        let d = load_dataset(&DatasetConfig {
            path: p,
            ..Default::default()
        })
        .unwrap();
        assert!(d.records.iter().all(|r| r.target.is_none()));
    }

    #[test]
    fn empty_after_skips_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "d.csv", "id,smiles,target\na,C1CC,1\n");
        assert!(matches!(
            load_dataset(&DatasetConfig {
                path: p,
                ..Default::default()
            }),
            Err(HarnessError::Data(_))
        ));
    }
}
