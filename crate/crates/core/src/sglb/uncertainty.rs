use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Ensemble prediction with its uncertainty split into knowledge
/// (member disagreement) and data (average member noise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    /// Mean probability, or mean of member means.
    pub prediction: f64,
    pub total: f64,
    pub knowledge: f64,
    pub data: f64,
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

fn kl_bernoulli(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a > 0.0 { a * (a / b).ln() } else { 0.0 };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Total is the entropy of the mean, data the mean entropy, knowledge the
/// mean divergence of each member from the mean.
pub fn decompose_classification(p: &[f64]) -> UncertaintyReport {
    let m = p.len() as f64;
    let mean = p.iter().sum::<f64>() / m;
    UncertaintyReport {
        prediction: mean,
        total: binary_entropy(mean),
        data: p.iter().map(|&x| binary_entropy(x)).sum::<f64>() / m,
        knowledge: p.iter().map(|&x| kl_bernoulli(x, mean)).sum::<f64>() / m,
    }
}

/// Knowledge is the variance of member means, data the mean member
/// variance, total the variance of the mixture.
pub fn decompose_regression(means: &[f64], variances: &[f64]) -> UncertaintyReport {
    let m = means.len() as f64;
    let mean = means.iter().sum::<f64>() / m;
    let knowledge = means.iter().map(|mu| (mu - mean) * (mu - mean)).sum::<f64>() / m;
    let data = variances.iter().sum::<f64>() / m;
    // Second moment of the mixture about the first member's mean, minus the
    // squared offset of the mixture mean.
    let c = means[0];
    let second = means
        .iter()
        .zip(variances)
        .map(|(mu, v)| v + (mu - c) * (mu - c))
        .sum::<f64>()
        / m;
    let total = second - (mean - c) * (mean - c);
    UncertaintyReport {
        prediction: mean,
        total,
        knowledge,
        data,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Criterion {
    Total,
    Knowledge,
    Data,
}

impl Criterion {
    pub fn score(self, r: &UncertaintyReport) -> f64 {
        match self {
            Criterion::Total => r.total,
            Criterion::Knowledge => r.knowledge,
            Criterion::Data => r.data,
        }
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "TOTAL" => Ok(Criterion::Total),
            "KNOWLEDGE" => Ok(Criterion::Knowledge),
            "DATA" => Ok(Criterion::Data),
            _ => Err(format!("unknown criterion '{s}'")),
        }
    }
}

/// Top `k` ids by descending score, ties by ascending id. `k` larger than
/// the pool is clamped.
pub fn rank_scores(ids: &[String], scores: &[f64], k: usize) -> Vec<String> {
    if k > ids.len() {
        log::warn!("k = {k} exceeds pool size {}; returning all", ids.len());
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then_with(|| ids[a].cmp(&ids[b])));
    order.into_iter().take(k).map(|i| ids[i].clone()).collect()
}

/// Ranks a pool of fingerprints by one uncertainty component.
pub fn rank_by_uncertainty(
    ensemble: &super::SglbEnsemble,
    pool: &crate::vectorize::FingerprintTable,
    criterion: Criterion,
    k: usize,
) -> Result<Vec<String>, super::SglbError> {
    ensemble.check_layout(&pool.layout)?;
    let reports = ensemble.predict(&pool.features())?;
    let scores: Vec<f64> = reports.iter().map(|r| criterion.score(r)).collect();
    Ok(rank_scores(&pool.ids, &scores, k))
}
