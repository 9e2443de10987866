use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate, pr_curve, Metrics};
use super::plot::{pr_curve_svg, uncertainty_band_svg};
use super::{apply_split, load_dataset, HarnessError, RunConfig, Split};
use crate::filtration::FiltrationKind;
use crate::sglb::{fit_ensemble, SglbEnsemble, Task, UncertaintyReport};
use crate::vectorize::{fingerprint_dataset, thread_pool, FingerprintTable, Layout, RecordFailure};

pub const REPORT_FORMAT: &str = "mpph-report";
pub const REPORT_VERSION: u32 = 1;

/// One line of `predictions.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub split: Option<Split>,
    pub target: Option<f64>,
    pub prediction: f64,
    pub total: f64,
    pub knowledge: f64,
    pub data: f64,
}

impl PredictionRow {
    pub fn new(id: &str, split: Option<Split>, target: Option<f64>, r: &UncertaintyReport) -> Self {
        PredictionRow {
            id: id.to_string(),
            split,
            target,
            prediction: r.prediction,
            total: r.total,
            knowledge: r.knowledge,
            data: r.data,
        }
    }
}

pub fn predictions_csv(rows: &[PredictionRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "split", "target", "prediction", "total", "knowledge", "data"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.split.map_or(String::new(), |s| s.name().to_string()),
            r.target.map_or(String::new(), |t| t.to_string()),
            r.prediction.to_string(),
            r.total.to_string(),
            r.knowledge.to_string(),
            r.data.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

/// Reads the format written by [`predictions_csv`].
pub fn read_predictions_csv<R: std::io::Read>(r: R) -> Result<Vec<PredictionRow>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(|e| HarnessError::Data(e.to_string()))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Data(format!("predictions file has no '{name}' column")))
    };
    let cols = ["id", "split", "target", "prediction", "total", "knowledge", "data"]
        .map(col)
        .into_iter()
        .collect::<Result<Vec<usize>, _>>()?;
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Data(e.to_string()))?;
        let field = |k: usize| rec.get(cols[k]).unwrap_or("").trim();
        let bad = |what: &str| HarnessError::Data(format!("predictions row {}: bad {what}", n + 1));
        let num = |k: usize, what: &str| field(k).parse::<f64>().map_err(|_| bad(what));
        let opt = |k: usize, what: &str| match field(k) {
            "" => Ok(None),
            v => v.parse::<f64>().map(Some).map_err(|_| bad(what)),
        };
        out.push(PredictionRow {
            id: field(0).to_string(),
            split: match field(1) {
                "" => None,
                v => Some(v.parse().map_err(HarnessError::Data)?),
            },
            target: opt(2, "target")?,
            prediction: num(3, "prediction")?,
            total: num(4, "total")?,
            knowledge: num(5, "knowledge")?,
            data: num(6, "data")?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; zero for a single repeat.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub seed: u64,
    /// `None` where a metric is undefined, e.g. a single-class split.
    pub metrics: BTreeMap<Split, Option<Metrics>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub layout: String,
    pub n_features: usize,
    pub repeats: Vec<RepeatResult>,
    pub summary: BTreeMap<Split, BTreeMap<String, Summary>>,
}

impl VariantReport {
    pub fn mean(&self, split: Split, metric: &str) -> Option<f64> {
        self.summary.get(&split)?.get(metric).map(|s| s.mean)
    }
}

/// Contents of `report.json`. Holds no timings, so identical inputs give
/// identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format: String,
    pub version: u32,
    pub task: Task,
    pub dataset: String,
    pub n_records: usize,
    pub n_skipped: usize,
    pub split_sizes: BTreeMap<Split, usize>,
    pub layout: String,
    pub seed: u64,
    /// Constant predictor at the training mean (regression only).
    pub baseline: Option<BTreeMap<Split, Metrics>>,
    /// Single-kind variants first when ablating; the combined set is last.
    pub variants: Vec<VariantReport>,
    /// Per-sample output of the combined model from the first repeat.
    pub predictions: Vec<PredictionRow>,
}

impl EvaluationReport {
    pub fn variant(&self, name: &str) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.name == name)
    }

    pub fn combined(&self) -> &VariantReport {
        self.variants.last().expect("at least one variant")
    }
}

/// Contents of `timing.json`, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub threads: usize,
    pub n_molecules: usize,
    pub fingerprinting: f64,
    pub training: f64,
    pub inference: f64,
    pub total: f64,
    pub started_unix: u64,
}

pub struct BenchOutcome {
    pub report: EvaluationReport,
    pub timing: Timing,
    pub model: SglbEnsemble,
    pub table: FingerprintTable,
    pub errors: Vec<RecordFailure>,
}

fn variant_name(kinds: &[FiltrationKind]) -> String {
    if kinds.len() == FiltrationKind::ALL.len() {
        "ALL".into()
    } else {
        kinds.iter().map(|k| k.code()).collect::<Vec<_>>().join("+")
    }
}

fn split_metrics(
    task: Task,
    predictions: &[f64],
    targets: &[f64],
    splits: &[Split],
) -> BTreeMap<Split, Option<Metrics>> {
    let mut out = BTreeMap::new();
    for s in Split::ALL {
        let idx = split_indices(splits, s);
        if idx.is_empty() {
            continue;
        }
        let p: Vec<f64> = idx.iter().map(|&i| predictions[i]).collect();
        let y: Vec<f64> = idx.iter().map(|&i| targets[i]).collect();
        let m = evaluate(&p, &y, task)
            .map_err(|e| log::warn!("{} metrics undefined: {e}", s.name()))
            .ok();
        out.insert(s, m);
    }
    out
}

fn summarize(repeats: &[RepeatResult]) -> BTreeMap<Split, BTreeMap<String, Summary>> {
    let mut out = BTreeMap::new();
    for s in Split::ALL {
        let runs: Vec<&Metrics> = repeats.iter().filter_map(|r| r.metrics.get(&s)?.as_ref()).collect();
        if runs.is_empty() {
            continue;
        }
        let mut per = BTreeMap::new();
        for (k, (name, _)) in runs[0].values().into_iter().enumerate() {
            let v: Vec<f64> = runs.iter().map(|m| m.values()[k].1).collect();
            per.insert(name.to_string(), Summary::of(&v));
        }
        out.insert(s, per);
    }
    out
}

/// Fingerprinted records with their targets and splits, aligned with the
/// table rows.
pub struct PreparedRun {
    pub table: FingerprintTable,
    pub targets: Vec<f64>,
    pub splits: Vec<Split>,
    /// Records skipped while loading or fingerprinting.
    pub errors: Vec<RecordFailure>,
    pub n_input: usize,
    /// Seconds spent fingerprinting.
    pub fingerprinting: f64,
}

pub fn split_indices(splits: &[Split], which: Split) -> Vec<usize> {
    (0..splits.len()).filter(|&i| splits[i] == which).collect()
}

/// Loads, splits and fingerprints the configured dataset.
pub fn prepare_run(cfg: &RunConfig) -> Result<PreparedRun, HarnessError> {
    let dataset = load_dataset(&cfg.dataset)?;
    let mut errors = dataset.errors.clone();
    let all_splits = apply_split(&dataset.records, &cfg.split, cfg.seed)?;
    let t = Instant::now();
    let batch = fingerprint_dataset(&dataset.graphs(), &cfg.fingerprint, cfg.threads)?;
    let fingerprinting = t.elapsed().as_secs_f64();
    errors.extend(batch.failures.iter().cloned());
    let index: BTreeMap<&str, usize> = dataset
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.record_id.as_str(), i))
        .collect();
    let kept: Vec<usize> = batch.table.ids.iter().map(|id| index[id.as_str()]).collect();
    let targets = kept
        .iter()
        .map(|&i| {
            let r = &dataset.records[i];
            r.target
                .ok_or_else(|| HarnessError::Data(format!("record {} has no target", r.record_id)))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(PreparedRun {
        targets,
        splits: kept.iter().map(|&i| all_splits[i]).collect(),
        table: batch.table,
        errors,
        n_input: dataset.records.len(),
        fingerprinting,
    })
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

/// Fingerprints, trains and evaluates per `cfg`, writing every artifact
/// into `cfg.out`.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchOutcome, HarnessError> {
    cfg.validate()?;
    let started = Instant::now();
    let started_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let task = cfg.model.task;

    let PreparedRun {
        table,
        targets,
        splits,
        errors,
        n_input,
        fingerprinting,
    } = prepare_run(cfg)?;
    let train = split_indices(&splits, Split::Train);
    if train.is_empty() {
        return Err(HarnessError::Data("no training records".into()));
    }
    let features = table.features();
    let train_y: Vec<f64> = train.iter().map(|&i| targets[i]).collect();

    let mut variants: Vec<Vec<FiltrationKind>> = Vec::new();
    if cfg.ablation && table.layout.kinds.len() > 1 {
        variants.extend(table.layout.kinds.iter().map(|&k| vec![k]));
    }
    variants.push(table.layout.kinds.clone());

    let pool = thread_pool(cfg.threads)?;
    let (mut training, mut inference) = (0.0, 0.0);
    let mut reports = Vec::new();
    let mut primary: Option<(SglbEnsemble, Vec<UncertaintyReport>)> = None;
    for kinds in &variants {
        let layout = Layout::new(kinds, table.layout.k_grid)?;
        let columns: Vec<usize> = kinds
            .iter()
            .flat_map(|&k| table.layout.block_range(k).expect("kind in table"))
            .collect();
        let x: Vec<Vec<f64>> = features.iter().map(|row| columns.iter().map(|&c| row[c]).collect()).collect();
        let train_x: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let mut repeats = Vec::new();
        for r in 0..cfg.repeats {
            let mut model_cfg = cfg.model.clone();
            model_cfg.seed = cfg.model_seed(r);
            let t = Instant::now();
            let ensemble = pool
                .install(|| fit_ensemble(&train_x, &train_y, &model_cfg))?
                .with_layout(layout.clone());
            training += t.elapsed().as_secs_f64();
            let t = Instant::now();
            let out = pool.install(|| ensemble.predict(&x))?;
            inference += t.elapsed().as_secs_f64();
            let preds: Vec<f64> = out.iter().map(|u| u.prediction).collect();
            repeats.push(RepeatResult {
                repeat: r,
                seed: model_cfg.seed,
                metrics: split_metrics(task, &preds, &targets, &splits),
            });
            if r == 0 && kinds == &table.layout.kinds {
                primary = Some((ensemble, out));
            }
        }
        log::info!("variant {} done", variant_name(kinds));
        reports.push(VariantReport {
            name: variant_name(kinds),
            layout: layout.describe(),
            n_features: layout.len(),
            summary: summarize(&repeats),
            repeats,
        });
    }
    let (model, primary_out) = primary.ok_or_else(|| HarnessError::Internal("combined model missing".into()))?;

    let baseline = match task {
        Task::RegressionWithUncertainty => {
            let mean = train_y.iter().sum::<f64>() / train_y.len() as f64;
            let constant = vec![mean; targets.len()];
            Some(
                split_metrics(task, &constant, &targets, &splits)
                    .into_iter()
                    .filter_map(|(s, m)| Some((s, m?)))
                    .collect(),
            )
        }
        Task::BinaryClassification => None,
    };
    let predictions: Vec<PredictionRow> = table
        .ids
        .iter()
        .zip(&primary_out)
        .enumerate()
        .map(|(i, (id, u))| PredictionRow::new(id, Some(splits[i]), Some(targets[i]), u))
        .collect();
    let mut split_sizes = BTreeMap::new();
    for &s in &splits {
        *split_sizes.entry(s).or_insert(0) += 1;
    }
    let report = EvaluationReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        task,
        dataset: cfg.dataset.path.display().to_string(),
        n_records: table.len(),
        n_skipped: errors.len(),
        split_sizes,
        layout: table.layout.describe(),
        seed: cfg.seed,
        baseline,
        variants: reports,
        predictions,
    };
    let timing = Timing {
        threads: cfg.threads,
        n_molecules: n_input,
        fingerprinting,
        training,
        inference,
        total: started.elapsed().as_secs_f64(),
        started_unix,
    };
    let outcome = BenchOutcome {
        report,
        timing,
        model,
        table,
        errors,
    };
    write_artifacts(cfg, &outcome)?;
    Ok(outcome)
}

fn write_artifacts(cfg: &RunConfig, o: &BenchOutcome) -> Result<(), HarnessError> {
    let out = &cfg.out;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let mut fp = Vec::new();
    o.table.write_csv(&mut fp)?;
    write_file(&out.join("fingerprints.csv"), fp)?;
    write_file(&out.join("model.json"), o.model.to_json())?;
    write_file(&out.join("predictions.csv"), predictions_csv(&o.report.predictions))?;
    write_file(&out.join("report.json"), pretty(&o.report))?;
    write_file(&out.join("timing.json"), pretty(&o.timing))?;
    write_file(&out.join("errors.json"), pretty(&o.errors))?;
    if cfg.plots {
        for s in [Split::Valid, Split::Test] {
            let rows: Vec<&PredictionRow> = o.report.predictions.iter().filter(|r| r.split == Some(s)).collect();
            if rows.is_empty() {
                continue;
            }
            match o.report.task {
                Task::RegressionWithUncertainty => {
                    let pts: Vec<(f64, f64, f64)> = rows
                        .iter()
                        .map(|r| (r.target.unwrap_or(f64::NAN), r.prediction, r.total.max(0.0).sqrt()))
                        .collect();
                    let title = format!("{} {} predictions", o.report.combined().name, s.name());
                    write_file(&out.join(format!("uncertainty_{}.svg", s.name())), uncertainty_band_svg(&title, &pts))?;
                }
                Task::BinaryClassification => {
                    let p: Vec<f64> = rows.iter().map(|r| r.prediction).collect();
                    let y: Vec<f64> = rows.iter().map(|r| r.target.unwrap_or(f64::NAN)).collect();
                    if let Ok(curve) = pr_curve(&p, &y) {
                        let title = format!("{} {} precision-recall", o.report.combined().name, s.name());
                        write_file(&out.join(format!("pr_curve_{}.svg", s.name())), pr_curve_svg(&title, &curve))?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
