use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetRecord, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[serde(alias = "TRAIN")]
    Train,
    #[serde(alias = "VALID", alias = "val", alias = "validation")]
    Valid,
    #[serde(alias = "TEST")]
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
            .map_err(|_| format!("unknown split '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum SplitSource {
    /// Seeded shuffle cut into train/valid/test fractions.
    Random { ratios: [f64; 3] },
    /// CSV with columns `record_id,split`.
    File { path: PathBuf },
    /// The `split` field of each JSON-lines record.
    Records,
}

impl Default for SplitSource {
    fn default() -> Self {
        SplitSource::Random { ratios: [0.8, 0.1, 0.1] }
    }
}

pub fn read_split_file(path: &Path) -> Result<HashMap<String, Split>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
        let bad = || HarnessError::Data(format!("{}: bad row {}", path.display(), n + 2));
        let id = rec.get(0).ok_or_else(bad)?.trim().to_string();
        let split: Split = rec.get(1).ok_or_else(bad)?.parse().map_err(HarnessError::Data)?;
        if out.insert(id.clone(), split).is_some() {
            return Err(HarnessError::Data(format!("{}: id {id} listed twice", path.display())));
        }
    }
    Ok(out)
}

pub fn write_split_file(path: &Path, ids: &[String], splits: &[Split]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| HarnessError::Data(format!("{}: {e}", path.display()));
    w.write_record(["record_id", "split"]).map_err(io)?;
    for (id, s) in ids.iter().zip(splits) {
        w.write_record([id.as_str(), s.name()]).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// One split per record, in record order.
pub fn apply_split(records: &[DatasetRecord], source: &SplitSource, seed: u64) -> Result<Vec<Split>, HarnessError> {
    match source {
        SplitSource::Random { ratios } => {
            let n = records.len();
            let n_train = (ratios[0] * n as f64).round() as usize;
            let n_valid = ((ratios[1] * n as f64).round() as usize).min(n - n_train.min(n));
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut out = vec![Split::Test; n];
            for (rank, &i) in order.iter().enumerate() {
                if rank < n_train {
                    out[i] = Split::Train;
                } else if rank < n_train + n_valid {
                    out[i] = Split::Valid;
                }
            }
            Ok(out)
        }
        SplitSource::File { path } => {
            let table = read_split_file(path)?;
            let missing: Vec<&str> = records
                .iter()
                .filter(|r| !table.contains_key(&r.record_id))
                .map(|r| r.record_id.as_str())
                .collect();
            if !missing.is_empty() {
                return Err(HarnessError::Data(format!(
                    "{} records not in split file: {}",
                    missing.len(),
                    missing.join(", ")
                )));
            }
            Ok(records.iter().map(|r| table[&r.record_id]).collect())
        }
        SplitSource::Records => {
            let missing: Vec<&str> = records
                .iter()
                .filter(|r| r.split.is_none())
                .map(|r| r.record_id.as_str())
                .collect();
            if !missing.is_empty() {
                return Err(HarnessError::Data(format!("records without split: {}", missing.join(", "))));
            }
            Ok(records.iter().map(|r| r.split.unwrap()).collect())
        }
    }
}
