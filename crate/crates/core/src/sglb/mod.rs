//! Gradient-boosted trees with Langevin noise and shrinkage, trained as
//! ensembles whose spread gives knowledge uncertainty.
//!
//! One iteration for one model, with `F` the current raw prediction:
//!
//! ```text
//! r_i  = -g(F(x_i), y_i) + ν_i,   ν_i ~ N(0, 2 / (β η))
//! h    = least-squares tree fitted to r
//! F    ← (1 - γ η) F + η h
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod binning;
pub mod reference;
pub mod tree;
pub mod uncertainty;

pub use binning::{BinMapper, BinnedMatrix};
pub use tree::{fit_tree, Tree, TreeParams};
pub use uncertainty::{
    decompose_classification, decompose_regression, rank_by_uncertainty, rank_scores, Criterion, UncertaintyReport,
};

use crate::vectorize::Layout;

pub const MODEL_FORMAT: &str = "mpph-sglb";
pub const MODEL_VERSION: u32 = 1;

/// Smallest variance used for the base `log σ²`.
const MIN_VARIANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SglbError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("feature rows have unequal lengths")]
    Ragged,
    #[error("{features} feature rows but {targets} targets")]
    Length { features: usize, targets: usize },
    #[error("no training rows")]
    Empty,
    #[error("classification targets must be 0 or 1; row {0} is not")]
    BadLabel(usize),
    #[error("classification needs both classes in the training set")]
    SingleClass,
    #[error("model was trained for {expected:?}, not {found:?}")]
    TaskMismatch { expected: Task, found: Task },
    #[error("model format {0}")]
    Format(String),
    #[error("feature layout differs: model {model}, input {input}")]
    Layout { model: String, input: String },
    #[error("expected {expected} features, got {got}")]
    Width { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Task {
    RegressionWithUncertainty,
    BinaryClassification,
}

impl Task {
    pub fn outputs(self) -> usize {
        match self {
            Task::RegressionWithUncertainty => 2,
            Task::BinaryClassification => 1,
        }
    }
}

/// Inverse diffusion temperature.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Beta {
    /// The number of training rows.
    #[default]
    DatasetSize,
    Value(f64),
    /// No noise.
    Infinite,
}

impl Beta {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Beta::DatasetSize => n as f64,
            Beta::Value(v) => v,
            Beta::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Beta::DatasetSize => s.serialize_str("dataset_size"),
            Beta::Infinite => s.serialize_str("inf"),
            Beta::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(Beta::Value(v)),
            Repr::Word(w) => match w.as_str() {
                "dataset_size" | "auto" => Ok(Beta::DatasetSize),
                "inf" | "infinity" | "none" => Ok(Beta::Infinite),
                other => Err(serde::de::Error::custom(format!("unknown beta '{other}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SglbConfig {
    pub iterations: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_split: usize,
    pub beta: Beta,
    pub shrinkage: f64,
    pub ensemble_size: usize,
    pub bins: usize,
    pub seed: u64,
    pub task: Task,
}

impl Default for SglbConfig {
    fn default() -> Self {
        SglbConfig {
            iterations: 1000,
            max_depth: 6,
            learning_rate: 0.05,
            min_samples_split: 2,
            beta: Beta::DatasetSize,
            shrinkage: 1e-4,
            ensemble_size: 10,
            bins: 255,
            seed: 0,
            task: Task::RegressionWithUncertainty,
        }
    }
}

impl SglbConfig {
    pub fn validate(&self) -> Result<(), SglbError> {
        let bad = |m: &str| Err(SglbError::Config(m.to_string()));
        if self.iterations == 0 || self.max_depth == 0 || self.ensemble_size == 0 {
            return bad("iterations, max_depth and ensemble_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if let Beta::Value(b) = self.beta {
            if !(b > 0.0) {
                return bad("beta must be positive");
            }
        }
        if !(self.shrinkage >= 0.0) || self.shrinkage * self.learning_rate >= 1.0 {
            return bad("shrinkage must satisfy 0 <= shrinkage * learning_rate < 1");
        }
        if !(2..=256).contains(&self.bins) {
            return bad("bins must be between 2 and 256");
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
        }
    }
}

/// One boosted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SglbModel {
    pub task: Task,
    pub seed: u64,
    pub learning_rate: f64,
    pub shrinkage: f64,
    /// Resolved inverse temperature; `None` when noise was off.
    pub beta: Option<f64>,
    pub base: Vec<f64>,
    pub trees: Vec<Tree>,
}

impl SglbModel {
    /// Raw outputs: the logit, or `(μ, log σ²)`.
    pub fn predict_raw(&self, x: &[f64]) -> Vec<f64> {
        let decay = 1.0 - self.shrinkage * self.learning_rate;
        let mut f = self.base.clone();
        for tree in &self.trees {
            let h = tree.predict(x);
            for (fo, &ho) in f.iter_mut().zip(h) {
                *fo = decay * *fo + self.learning_rate * ho;
            }
        }
        f
    }
}

/// Prediction of one member for one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MemberPrediction {
    Probability(f64),
    Gaussian { mean: f64, variance: f64 },
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_inputs(features: &[Vec<f64>], targets: &[f64], task: Task) -> Result<(), SglbError> {
    if features.is_empty() {
        return Err(SglbError::Empty);
    }
    if features.len() != targets.len() {
        return Err(SglbError::Length {
            features: features.len(),
            targets: targets.len(),
        });
    }
    let width = features[0].len();
    for (row, r) in features.iter().enumerate() {
        if r.len() != width {
            return Err(SglbError::Ragged);
        }
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(SglbError::NonFinite { row, col });
        }
    }
    if let Some(row) = targets.iter().position(|v| !v.is_finite()) {
        return Err(SglbError::NonFinite { row, col: width });
    }
    if task == Task::BinaryClassification {
        if let Some(row) = targets.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(SglbError::BadLabel(row));
        }
        let pos = targets.iter().filter(|&&v| v == 1.0).count();
        if pos == 0 || pos == targets.len() {
            return Err(SglbError::SingleClass);
        }
    }
    Ok(())
}

/// Starting prediction: the target mean and log variance, or the log-odds
/// of the positive rate.
pub fn base_prediction(targets: &[f64], task: Task) -> Vec<f64> {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    match task {
        Task::RegressionWithUncertainty => {
            let var = targets.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
            vec![mean, var.max(MIN_VARIANCE).ln()]
        }
        Task::BinaryClassification => vec![(mean / (1.0 - mean)).ln()],
    }
}

/// Per-sample descent directions written into `out` (`outputs` per row).
///
/// Classification uses the negative log-loss gradient `y - p`. Regression
/// uses the Gaussian negative log-likelihood gradient in `(μ, s = log σ²)`
/// scaled by the inverse Fisher information, giving `(y - μ, (y - μ)² e^{-s} - 1)`.
pub fn descent_targets(raw: &[f64], targets: &[f64], task: Task, out: &mut [f64]) {
    match task {
        Task::BinaryClassification => {
            for (i, &y) in targets.iter().enumerate() {
                out[i] = y - sigmoid(raw[i]);
            }
        }
        Task::RegressionWithUncertainty => {
            for (i, &y) in targets.iter().enumerate() {
                let (mu, s) = (raw[2 * i], raw[2 * i + 1]);
                let r = y - mu;
                out[2 * i] = r;
                out[2 * i + 1] = r * r * (-s).exp() - 1.0;
            }
        }
    }
}

/// Bins features once for every member of an ensemble.
pub struct PreparedData {
    pub mapper: BinMapper,
    pub binned: BinnedMatrix,
}

impl PreparedData {
    pub fn new(features: &[Vec<f64>], bins: usize) -> Self {
        let mapper = BinMapper::fit(features, bins);
        let binned = mapper.transform(features);
        PreparedData { mapper, binned }
    }
}

/// Trains one model on prepared data with an explicit seed.
pub fn fit_prepared(data: &PreparedData, targets: &[f64], cfg: &SglbConfig, seed: u64) -> SglbModel {
    let n = targets.len();
    let d = cfg.task.outputs();
    let eta = cfg.learning_rate;
    let beta = cfg.beta.resolve(n);
    let noise = if beta.is_finite() {
        Some(Normal::new(0.0, (2.0 / (beta * eta)).sqrt()).expect("finite positive scale"))
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = base_prediction(targets, cfg.task);
    let mut raw: Vec<f64> = (0..n).flat_map(|_| base.iter().copied()).collect();
    let mut r = vec![0.0; n * d];
    let decay = 1.0 - cfg.shrinkage * eta;
    let params = cfg.tree_params();
    let mut trees = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        descent_targets(&raw, targets, cfg.task, &mut r);
        if let Some(noise) = &noise {
            for v in r.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
        let (tree, leaf_of) = fit_tree(&data.binned, &data.mapper.thresholds, &r, d, &params);
        for i in 0..n {
            let leaf = leaf_of[i] as usize;
            for o in 0..d {
                raw[i * d + o] = decay * raw[i * d + o] + eta * tree.value[leaf * d + o];
            }
        }
        trees.push(tree);
    }
    SglbModel {
        task: cfg.task,
        seed,
        learning_rate: eta,
        shrinkage: cfg.shrinkage,
        beta: beta.is_finite().then_some(beta),
        base,
        trees,
    }
}

/// Trains a single model with `cfg.seed`.
pub fn fit(features: &[Vec<f64>], targets: &[f64], cfg: &SglbConfig) -> Result<SglbModel, SglbError> {
    cfg.validate()?;
    check_inputs(features, targets, cfg.task)?;
    let data = PreparedData::new(features, cfg.bins);
    Ok(fit_prepared(&data, targets, cfg, cfg.seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SglbEnsemble {
    pub format: String,
    pub version: u32,
    /// Fingerprint layout the models were trained on, if any.
    pub layout: Option<Layout>,
    pub n_features: usize,
    pub config: SglbConfig,
    pub models: Vec<SglbModel>,
}

/// Trains `cfg.ensemble_size` members with seeds `cfg.seed + m`, in
/// parallel on the current rayon pool.
pub fn fit_ensemble(features: &[Vec<f64>], targets: &[f64], cfg: &SglbConfig) -> Result<SglbEnsemble, SglbError> {
    cfg.validate()?;
    check_inputs(features, targets, cfg.task)?;
    let data = PreparedData::new(features, cfg.bins);
    let models = (0..cfg.ensemble_size as u64)
        .into_par_iter()
        .map(|m| fit_prepared(&data, targets, cfg, cfg.seed.wrapping_add(m)))
        .collect();
    Ok(SglbEnsemble {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        layout: None,
        n_features: features[0].len(),
        config: cfg.clone(),
        models,
    })
}

impl SglbEnsemble {
    pub fn with_layout(mut self, layout: Layout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn task(&self) -> Task {
        self.config.task
    }

    /// Refuses inputs built with a different fingerprint layout.
    pub fn check_layout(&self, layout: &Layout) -> Result<(), SglbError> {
        match &self.layout {
            Some(own) if own != layout => Err(SglbError::Layout {
                model: own.describe(),
                input: layout.describe(),
            }),
            _ => Ok(()),
        }
    }

    pub fn members(&self, x: &[f64]) -> Result<Vec<MemberPrediction>, SglbError> {
        if x.len() != self.n_features {
            return Err(SglbError::Width {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self
            .models
            .iter()
            .map(|m| {
                let raw = m.predict_raw(x);
                match m.task {
                    Task::BinaryClassification => MemberPrediction::Probability(sigmoid(raw[0])),
                    Task::RegressionWithUncertainty => MemberPrediction::Gaussian {
                        mean: raw[0],
                        variance: raw[1].exp(),
                    },
                }
            })
            .collect())
    }

    /// Prediction and uncertainty split for each row, in parallel.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<UncertaintyReport>, SglbError> {
        rows.par_iter()
            .map(|x| {
                let members = self.members(x)?;
                Ok(match self.task() {
                    Task::BinaryClassification => {
                        let p: Vec<f64> = members
                            .iter()
                            .map(|m| match m {
                                MemberPrediction::Probability(p) => *p,
                                MemberPrediction::Gaussian { .. } => unreachable!(),
                            })
                            .collect();
                        decompose_classification(&p)
                    }
                    Task::RegressionWithUncertainty => {
                        let (mu, var): (Vec<f64>, Vec<f64>) = members
                            .iter()
                            .map(|m| match m {
                                MemberPrediction::Gaussian { mean, variance } => (*mean, *variance),
                                MemberPrediction::Probability(_) => unreachable!(),
                            })
                            .unzip();
                        decompose_regression(&mu, &var)
                    }
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SglbError> {
        let e: SglbEnsemble = serde_json::from_str(text).map_err(|e| SglbError::Format(e.to_string()))?;
        if e.format != MODEL_FORMAT || e.version != MODEL_VERSION {
            return Err(SglbError::Format(format!(
                "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                e.format, e.version
            )));
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64, (i % 5) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0] + 0.2 * r[1]).collect();
        (x, y)
    }

    fn quick(task: Task) -> SglbConfig {
        SglbConfig {
            iterations: 30,
            ensemble_size: 3,
            task,
            ..Default::default()
        }
    }

    #[test]
    fn constant_target_fixed_point() {
        let (x, _) = toy(40);
        let y = vec![5.0; 40];
        let cfg = SglbConfig {
            iterations: 500,
            shrinkage: 0.0,
            beta: Beta::Infinite,
            ..quick(Task::RegressionWithUncertainty)
        };
        let m = fit(&x, &y, &cfg).unwrap();
        for r in &x {
            assert!((m.predict_raw(r)[0] - 5.0).abs() < 1e-6);
        }
    }

    #[test]
    fn single_iteration_shrinkage_law() {
        let (x, y) = toy(30);
        let cfg = SglbConfig {
            iterations: 1,
            shrinkage: 0.5,
            learning_rate: 0.4,
            ..quick(Task::RegressionWithUncertainty)
        };
        let m = fit(&x, &y, &cfg).unwrap();
        for r in &x {
            let h = m.trees[0].predict(r);
            let p = m.predict_raw(r);
            for o in 0..2 {
                assert_eq!(p[o], (1.0 - 0.5 * 0.4) * m.base[o] + 0.4 * h[o]);
            }
        }
    }

    #[test]
    fn seeds_change_noisy_models() {
        let (x, y) = toy(50);
        let a = fit(&x, &y, &SglbConfig { seed: 1, ..quick(Task::RegressionWithUncertainty) }).unwrap();
        let b = fit(&x, &y, &SglbConfig { seed: 2, ..quick(Task::RegressionWithUncertainty) }).unwrap();
        assert!(x.iter().any(|r| a.predict_raw(r) != b.predict_raw(r)));
        let c = fit(&x, &y, &SglbConfig { seed: 1, ..quick(Task::RegressionWithUncertainty) }).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn ensemble_members_and_single_member() {
        let (x, y) = toy(50);
        let e = fit_ensemble(&x, &y, &quick(Task::RegressionWithUncertainty)).unwrap();
        assert_eq!(e.models.len(), 3);
        assert_eq!(e.models.iter().map(|m| m.seed).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_ne!(e.models[0], e.models[1]);
        let one = fit_ensemble(&x, &y, &SglbConfig { ensemble_size: 1, ..quick(Task::RegressionWithUncertainty) }).unwrap();
        for rep in one.predict(&x).unwrap() {
            assert_eq!(rep.knowledge, 0.0);
        }
    }

    #[test]
    fn classification_learns() {
        let (x, _) = toy(60);
        let y: Vec<f64> = x.iter().map(|r| if r[0] > 0.5 { 1.0 } else { 0.0 }).collect();
        let e = fit_ensemble(&x, &y, &SglbConfig { iterations: 100, ..quick(Task::BinaryClassification) }).unwrap();
        let reps = e.predict(&x).unwrap();
        assert!(reps[5].prediction < 0.5 && reps[55].prediction > 0.5);
    }

    #[test]
    fn input_errors() {
        let (x, mut y) = toy(10);
        let cfg = quick(Task::RegressionWithUncertainty);
        assert!(matches!(fit(&x, &y[..5], &cfg), Err(SglbError::Length { .. })));
        let mut bad = x.clone();
        bad[3][1] = f64::NAN;
        assert!(matches!(fit(&bad, &y, &cfg), Err(SglbError::NonFinite { row: 3, col: 1 })));
        y.iter_mut().for_each(|v| *v = 1.0);
        assert!(matches!(fit(&x, &y, &quick(Task::BinaryClassification)), Err(SglbError::SingleClass)));
        assert!(fit(&x, &y, &SglbConfig { learning_rate: 0.0, ..cfg.clone() }).is_err());
        assert!(fit(&x, &y, &SglbConfig { beta: Beta::Value(-1.0), ..cfg.clone() }).is_err());
        assert!(fit(&x, &y, &SglbConfig { shrinkage: 20.0, learning_rate: 0.05, ..cfg }).is_err());
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let (x, y) = toy(30);
        let e = fit_ensemble(&x, &y, &quick(Task::RegressionWithUncertainty)).unwrap();
        let text = e.to_json();
        let back = SglbEnsemble::from_json(&text).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.predict(&x).unwrap(), e.predict(&x).unwrap());
        let tampered = text.replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(SglbEnsemble::from_json(&tampered), Err(SglbError::Format(_))));
    }

    #[test]
    fn beta_serialization() {
        for (b, s) in [(Beta::DatasetSize, "\"dataset_size\""), (Beta::Infinite, "\"inf\""), (Beta::Value(2.5), "2.5")] {
            assert_eq!(serde_json::to_string(&b).unwrap(), s);
            assert_eq!(serde_json::from_str::<Beta>(s).unwrap(), b);
        }
    }
}
