//! Plain gradient boosting: no gradient noise, no shrinkage. Kept as the
//! reference that the Langevin trainer must match when both are switched off.

use super::{base_prediction, check_inputs, descent_targets, fit_tree, PreparedData, SglbConfig, SglbError, Tree};

#[derive(Debug, Clone, PartialEq)]
pub struct VanillaModel {
    pub learning_rate: f64,
    pub base: Vec<f64>,
    pub trees: Vec<Tree>,
}

impl VanillaModel {
    pub fn predict_raw(&self, x: &[f64]) -> Vec<f64> {
        let mut f = self.base.clone();
        for tree in &self.trees {
            for (fo, &ho) in f.iter_mut().zip(tree.predict(x)) {
                *fo += self.learning_rate * ho;
            }
        }
        f
    }
}

/// `F_t = F_{t-1} + η h_t`, each `h_t` fitted to the descent targets at `F_{t-1}`.
/// Only the tree, task, iteration and learning-rate fields of `cfg` are used.
pub fn fit_vanilla(features: &[Vec<f64>], targets: &[f64], cfg: &SglbConfig) -> Result<VanillaModel, SglbError> {
    check_inputs(features, targets, cfg.task)?;
    let data = PreparedData::new(features, cfg.bins);
    let d = cfg.task.outputs();
    let n = targets.len();
    let base = base_prediction(targets, cfg.task);
    let mut f: Vec<f64> = (0..n).flat_map(|_| base.iter().copied()).collect();
    let mut r = vec![0.0; n * d];
    let params = cfg.tree_params();
    let mut trees = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        descent_targets(&f, targets, cfg.task, &mut r);
        let (tree, _) = fit_tree(&data.binned, &data.mapper.thresholds, &r, d, &params);
        for (i, row) in features.iter().enumerate() {
            for (o, &h) in tree.predict(row).iter().enumerate() {
                f[i * d + o] += cfg.learning_rate * h;
            }
        }
        trees.push(tree);
    }
    Ok(VanillaModel {
        learning_rate: cfg.learning_rate,
        base,
        trees,
    })
}
