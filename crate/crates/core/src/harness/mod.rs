//! Dataset ingestion, splits, metrics and the benchmark driver behind the
//! command-line tool.

mod bench;
mod dataset;
mod evaluate;
mod plot;
mod split;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sglb::{SglbConfig, SglbError};
use crate::vectorize::{FingerprintOptions, VectorizeError};

pub use bench::{
    predictions_csv, prepare_run, read_predictions_csv, run_benchmark, split_indices, BenchOutcome, PreparedRun, EvaluationReport, PredictionRow, RepeatResult, Summary, Timing,
    VariantReport, REPORT_FORMAT, REPORT_VERSION,
};
pub use dataset::{load_dataset, DatasetConfig, DatasetFormat, DatasetRecord, LoadedDataset, Source};
pub use evaluate::{
    evaluate, f1_score, pr_curve, prc_auc, roc_auc, rmse, ClassificationMetrics, Metrics, EvalError,
    RegressionMetrics, F1_THRESHOLD,
};
pub use plot::{pr_curve_svg, uncertainty_band_svg};
pub use split::{apply_split, read_split_file, write_split_file, Split, SplitSource};

/// Failures of a run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("internal invariant: {0}")]
    Internal(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Data(_) => 3,
            HarnessError::Internal(_) => 4,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<VectorizeError> for HarnessError {
    fn from(e: VectorizeError) -> Self {
        match e {
            VectorizeError::NoKinds | VectorizeError::DuplicateKind(_) | VectorizeError::ThreadPool(_) => {
                HarnessError::Config(e.to_string())
            }
            VectorizeError::Homology(crate::homology::HomologyError::FaceClosure { .. }) => {
                HarnessError::Internal(e.to_string())
            }
            _ => HarnessError::Data(e.to_string()),
        }
    }
}

impl From<SglbError> for HarnessError {
    fn from(e: SglbError) -> Self {
        match e {
            SglbError::Config(_) => HarnessError::Config(e.to_string()),
            _ => HarnessError::Data(e.to_string()),
        }
    }
}

impl From<crate::metrics::MetricsError> for HarnessError {
    fn from(e: crate::metrics::MetricsError) -> Self {
        HarnessError::Data(e.to_string())
    }
}

impl From<EvalError> for HarnessError {
    fn from(e: EvalError) -> Self {
        HarnessError::Data(e.to_string())
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn default_repeats() -> usize {
    3
}

fn default_out() -> PathBuf {
    PathBuf::from("mpph-out")
}

/// Everything a run needs. Read from JSON or TOML; command-line flags
/// override `threads`, `seed`, `out` and `repeats`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub fingerprint: FingerprintOptions,
    #[serde(default)]
    pub model: SglbConfig,
    #[serde(default)]
    pub split: SplitSource,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// One extra model per single filtration kind.
    #[serde(default)]
    pub ablation: bool,
    #[serde(default = "default_true")]
    pub plots: bool,
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn new(dataset: DatasetConfig) -> Self {
        RunConfig {
            dataset,
            fingerprint: FingerprintOptions::default(),
            model: SglbConfig::default(),
            split: SplitSource::default(),
            threads: default_threads(),
            out: default_out(),
            seed: 0,
            repeats: default_repeats(),
            ablation: false,
            plots: true,
        }
    }

    /// Parses a `.toml` file, anything else as JSON. Relative paths inside
    /// are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.dataset.path = base.join(&cfg.dataset.path);
        if let SplitSource::File { path } = &mut cfg.split {
            *path = base.join(&*path);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !self.dataset.path.is_file() {
            return bad(format!("dataset {} does not exist", self.dataset.path.display()));
        }
        match &self.split {
            SplitSource::Random { ratios } => {
                if ratios.iter().any(|r| !(*r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return bad(format!("split ratios {ratios:?} must be non-negative and sum to 1"));
                }
            }
            SplitSource::File { path } if !path.is_file() => {
                return bad(format!("split file {} does not exist", path.display()));
            }
            _ => {}
        }
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.fingerprint.kinds.is_empty() {
            return bad("at least one filtration kind is required".into());
        }
        self.model.validate()?;
        Ok(())
    }

    /// Model seed for repeat `r`. Members use consecutive seeds after it.
    pub fn model_seed(&self, repeat: usize) -> u64 {
        self.seed
            .wrapping_add((repeat as u64).wrapping_mul(self.model.ensemble_size as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("d.csv"), "id,smiles,target\na,C,1\n").unwrap();
        let toml_text = r#"
seed = 7
threads = 2
[dataset]
path = "d.csv"
[fingerprint]
kinds = ["AM", "BT"]
k_grid = 4
[model]
iterations = 10
beta = "inf"
[split]
mode = "random"
ratios = [0.6, 0.2, 0.2]
"#;
        let json_text = r#"{"seed": 7, "threads": 2, "dataset": {"path": "d.csv"},
            "fingerprint": {"kinds": ["AM", "BT"], "k_grid": 4},
            "model": {"iterations": 10, "beta": "inf"},
            "split": {"mode": "random", "ratios": [0.6, 0.2, 0.2]}}"#;
        std::fs::write(dir.path().join("c.toml"), toml_text).unwrap();
        std::fs::write(dir.path().join("c.json"), json_text).unwrap();
        let a = RunConfig::load(&dir.path().join("c.toml")).unwrap();
        let b = RunConfig::load(&dir.path().join("c.json")).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_eq!(a.repeats, 3);
        assert_eq!(a.model_seed(2), 7 + 20);
    }

    #[test]
    fn invalid_configs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "id,smiles,target\n").unwrap();
        let mut cfg = RunConfig::new(DatasetConfig {
            path,
            ..Default::default()
        });
        cfg.validate().unwrap();
        cfg.split = SplitSource::Random { ratios: [0.8, 0.1, 0.2] };
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        cfg.split = SplitSource::File {
            path: dir.path().join("missing.csv"),
        };
        assert!(cfg.validate().is_err());
        cfg.split = SplitSource::default();
        cfg.model.learning_rate = 0.0;
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
        let err = RunConfig::load(&dir.path().join("nope.json")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        std::fs::write(dir.path().join("x.json"), r#"{"dataset": {"path": "d.csv"}, "colour": 1}"#).unwrap();
        assert!(RunConfig::load(&dir.path().join("x.json")).is_err());
    }
}
