use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sglb::Task;

/// A sample counts as positive when its probability exceeds this.
pub const F1_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{predictions} predictions but {labels} labels")]
    Length { predictions: usize, labels: usize },
    #[error("no samples")]
    Empty,
    #[error("label at {0} is not 0 or 1")]
    BadLabel(usize),
    #[error("AUC is undefined when every label is {0}")]
    SingleClass(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub roc_auc: f64,
    pub prc_auc: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metrics {
    Regression(RegressionMetrics),
    Classification(ClassificationMetrics),
}

impl Metrics {
    /// `(name, value)` pairs in a fixed order.
    pub fn values(&self) -> Vec<(&'static str, f64)> {
        match self {
            Metrics::Regression(m) => vec![("rmse", m.rmse)],
            Metrics::Classification(m) => vec![("roc_auc", m.roc_auc), ("prc_auc", m.prc_auc), ("f1", m.f1)],
        }
    }
}

fn check(predictions: &[f64], labels: &[f64]) -> Result<(), EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::Length {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

fn binary(labels: &[f64]) -> Result<Vec<bool>, EvalError> {
    let c: Vec<bool> = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| match y {
            0.0 => Ok(false),
            1.0 => Ok(true),
            _ => Err(EvalError::BadLabel(i)),
        })
        .collect::<Result<_, _>>()?;
    match c.iter().filter(|&&x| x).count() {
        0 => Err(EvalError::SingleClass(0)),
        n if n == c.len() => Err(EvalError::SingleClass(1)),
        _ => Ok(c),
    }
}

pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64, EvalError> {
    check(predictions, targets)?;
    let sse: f64 = predictions.iter().zip(targets).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok((sse / targets.len() as f64).sqrt())
}

/// Cumulative `(tp, fp)` after each group of tied scores, highest first.
fn cumulative_counts(scores: &[f64], labels: &[bool]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (k, &i) in order.iter().enumerate() {
        if labels[i] {
            tp += 1;
        } else {
            fp += 1;
        }
        if k + 1 == order.len() || scores[order[k + 1]] != scores[i] {
            out.push((tp, fp));
        }
    }
    out
}

/// Trapezoidal area under (FPR, TPR) over every distinct threshold.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64, EvalError> {
    check(scores, labels)?;
    let c = binary(labels)?;
    let pos = c.iter().filter(|&&x| x).count();
    let neg = c.len() - pos;
    let mut twice_area = 0usize;
    let (mut tp0, mut fp0) = (0, 0);
    for (tp, fp) in cumulative_counts(scores, &c) {
        twice_area += (fp - fp0) * (tp + tp0);
        (tp0, fp0) = (tp, fp);
    }
    Ok(twice_area as f64 / (2 * pos * neg) as f64)
}

/// Points `(recall, precision)` of the sweep `TP(q) = Σ [p_i > q] c_i`,
/// from the highest threshold down, starting at `(0, 1)`.
pub fn pr_curve(scores: &[f64], labels: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    check(scores, labels)?;
    let c = binary(labels)?;
    let pos = c.iter().filter(|&&x| x).count() as f64;
    let mut points = vec![(0.0, 1.0)];
    for (tp, fp) in cumulative_counts(scores, &c) {
        points.push((tp as f64 / pos, tp as f64 / (tp + fp) as f64));
    }
    Ok(points)
}

/// Trapezoidal area under [`pr_curve`].
pub fn prc_auc(scores: &[f64], labels: &[f64]) -> Result<f64, EvalError> {
    let pts = pr_curve(scores, labels)?;
    Ok(pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum())
}

/// F1 with positives `p > 0.5`; zero when there are no true positives.
pub fn f1_score(probabilities: &[f64], labels: &[f64]) -> Result<f64, EvalError> {
    check(probabilities, labels)?;
    let c = binary(labels)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &y) in probabilities.iter().zip(&c) {
        match (p > F1_THRESHOLD, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

pub fn evaluate(predictions: &[f64], labels: &[f64], task: Task) -> Result<Metrics, EvalError> {
    Ok(match task {
        Task::RegressionWithUncertainty => Metrics::Regression(RegressionMetrics {
            rmse: rmse(predictions, labels)?,
        }),
        Task::BinaryClassification => Metrics::Classification(ClassificationMetrics {
            roc_auc: roc_auc(predictions, labels)?,
            prc_auc: prc_auc(predictions, labels)?,
            f1: f1_score(predictions, labels)?,
        }),
    })
}
