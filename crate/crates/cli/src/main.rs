use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use mpph::filtration::{FiltrationKind, FiltrationSpec};
use mpph::harness::{
    evaluate, load_dataset, predictions_csv, prepare_run, read_predictions_csv, run_benchmark, split_indices,
    DatasetConfig, HarnessError, PredictionRow, RunConfig, Split,
};
use mpph::metrics::compare_pair;
use mpph::molgraph::{load_graph_json, parse_smiles, MolecularGraph, Strictness};
use mpph::sglb::{fit_ensemble, rank_scores, Criterion, SglbEnsemble, Task};
use mpph::vectorize::{
    auto_k_grid, diagram_records, fingerprint_dataset, resolve_specs, FingerprintOptions, FingerprintTable,
};

#[derive(Parser)]
#[command(name = "mpph", version, about = "Persistent-homology fingerprints and boosted ensembles for molecules")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run config, JSON or TOML.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    repeats: Option<usize>,
    /// More logging; repeat for more.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Default)]
struct FingerprintFlags {
    /// Comma-separated filtration kinds (AM, PC, BT, CH).
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<FiltrationKind>>,
    #[arg(long)]
    k_grid: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Regression,
    Classification,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Regression => Task::RegressionWithUncertainty,
            TaskArg::Classification => Task::BinaryClassification,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fingerprint a dataset.
    Fingerprint {
        /// Dataset file; overrides the config.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        fp: FingerprintFlags,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
        /// Also dump every row diagram to diagrams.jsonl.
        #[arg(long)]
        diagrams: bool,
    },
    /// Train an ensemble on the training split and write model.json.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        fp: FingerprintFlags,
    },
    /// Predict with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Dataset to fingerprint, or a fingerprint table (.csv/.jsonl with a layout line).
        #[arg(long)]
        input: PathBuf,
    },
    /// Score a predictions.csv that carries targets.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
    },
    /// Rank a pool by one uncertainty component.
    RankUncertainty {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "knowledge")]
        criterion: Criterion,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Compare two molecules (SMILES or molecule JSON files).
    Distance {
        a: String,
        b: String,
        /// Wasserstein order.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[command(flatten)]
        fp: FingerprintFlags,
    },
    /// Full benchmark: fingerprints, training, evaluation, artifacts.
    Bench {
        #[arg(long)]
        input: Option<PathBuf>,
        /// One model per single filtration kind plus the combined set.
        #[arg(long)]
        ablation: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            eprintln!("error: internal invariant violated");
            ExitCode::from(4)
        }
    }
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Fingerprint {
            input,
            fp,
            format,
            diagrams,
        } => fingerprint(&config(&cli.common, input.as_deref(), fp)?, *format, *diagrams),
        Command::Train { input, fp } => train(&config(&cli.common, input.as_deref(), fp)?),
        Command::Predict { model, input } => predict(&cli.common, model, input),
        Command::Evaluate { predictions, task } => evaluate_file(&cli.common, predictions, *task),
        Command::RankUncertainty {
            model,
            input,
            criterion,
            k,
        } => rank(&cli.common, model, input, *criterion, *k),
        Command::Distance { a, b, p, fp } => distance(&cli.common, a, b, *p, fp),
        Command::Bench { input, ablation } => {
            let mut cfg = config(&cli.common, input.as_deref(), &FingerprintFlags::default())?;
            cfg.ablation |= *ablation;
            bench(&cfg)
        }
    }
}

/// Config file (if any) with command-line overrides applied.
fn config(common: &Common, input: Option<&Path>, fp: &FingerprintFlags) -> Result<RunConfig, HarnessError> {
    let mut cfg = match (&common.config, input) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(p)) => RunConfig::new(DatasetConfig::new(p)),
        (None, None) => return Err(HarnessError::Config("give --config or --input".into())),
    };
    if let Some(p) = input {
        cfg.dataset.path = p.to_path_buf();
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(r) = common.repeats {
        cfg.repeats = r;
    }
    if let Some(k) = &fp.kinds {
        cfg.fingerprint.kinds = k.clone();
    }
    if fp.k_grid.is_some() {
        cfg.fingerprint.k_grid = fp.k_grid;
    }
    cfg.model.seed = cfg.seed;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| HarnessError::io(path, e))?))
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| HarnessError::io(path, e))?;
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn fingerprint(cfg: &RunConfig, format: TableFormat, diagrams: bool) -> Result<(), HarnessError> {
    cfg.validate()?;
    let data = load_dataset(&cfg.dataset)?;
    let graphs = data.graphs();
    let batch = fingerprint_dataset(&graphs, &cfg.fingerprint, cfg.threads)?;
    let (name, out) = match format {
        TableFormat::Csv => ("fingerprints.csv", cfg.out.join("fingerprints.csv")),
        TableFormat::Jsonl => ("fingerprints.jsonl", cfg.out.join("fingerprints.jsonl")),
    };
    let w = create(&out)?;
    match format {
        TableFormat::Csv => batch.table.write_csv(w)?,
        TableFormat::Jsonl => batch.table.write_jsonl(w)?,
    }
    let mut errors = data.errors.clone();
    errors.extend(batch.failures.iter().cloned());
    write_text(&cfg.out.join("errors.json"), &pretty(&errors))?;
    if diagrams {
        let (layout, specs) = resolve_specs(&graphs, &cfg.fingerprint)?;
        let path = cfg.out.join("diagrams.jsonl");
        let mut w = create(&path)?;
        for (id, g) in graphs.iter().filter(|(id, _)| batch.table.row(id).is_some()) {
            for rec in diagram_records(id, g, &specs, layout.k_grid, &cfg.fingerprint.homology)? {
                let line = serde_json::to_string(&rec).expect("serializable");
                writeln!(w, "{line}").map_err(|e| HarnessError::io(&path, e))?;
            }
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))?;
    }
    println!(
        "{} fingerprints ({}) -> {}; {} skipped",
        batch.table.len(),
        batch.table.layout.describe(),
        cfg.out.join(name).display(),
        errors.len()
    );
    Ok(())
}

fn train(cfg: &RunConfig) -> Result<(), HarnessError> {
    cfg.validate()?;
    let run = prepare_run(cfg)?;
    let train = split_indices(&run.splits, Split::Train);
    if train.is_empty() {
        return Err(HarnessError::Data("no training records".into()));
    }
    let features = run.table.features();
    let x: Vec<Vec<f64>> = train.iter().map(|&i| features[i].clone()).collect();
    let y: Vec<f64> = train.iter().map(|&i| run.targets[i]).collect();
    let mut model_cfg = cfg.model.clone();
    model_cfg.seed = cfg.model_seed(0);
    let pool = mpph::vectorize::thread_pool(cfg.threads)?;
    let model = pool
        .install(|| fit_ensemble(&x, &y, &model_cfg))?
        .with_layout(run.table.layout.clone());
    let path = cfg.out.join("model.json");
    write_text(&path, &model.to_json())?;
    write_text(&cfg.out.join("errors.json"), &pretty(&run.errors))?;
    println!("trained {} members on {} records -> {}", model.models.len(), x.len(), path.display());
    Ok(())
}

fn load_model(path: &Path) -> Result<SglbEnsemble, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(SglbEnsemble::from_json(&text)?)
}

fn is_table(path: &Path) -> Result<bool, HarnessError> {
    use std::io::BufRead;
    let mut first = String::new();
    BufReader::new(File::open(path).map_err(|e| HarnessError::io(path, e))?)
        .read_line(&mut first)
        .map_err(|e| HarnessError::io(path, e))?;
    Ok(first.starts_with("# ") || first.contains("\"version\""))
}

/// Fingerprints of the pool, in the model's layout, plus any targets.
fn pool_table(
    common: &Common,
    model: &SglbEnsemble,
    input: &Path,
) -> Result<(FingerprintTable, BTreeMap<String, f64>), HarnessError> {
    if is_table(input)? {
        let r = BufReader::new(File::open(input).map_err(|e| HarnessError::io(input, e))?);
        let table = if input.extension().is_some_and(|e| e == "jsonl") {
            FingerprintTable::read_jsonl(r)?
        } else {
            FingerprintTable::read_csv(r)?
        };
        return Ok((table, BTreeMap::new()));
    }
    let mut opts = match &common.config {
        Some(p) => RunConfig::load(p)?.fingerprint,
        None => FingerprintOptions::default(),
    };
    let layout = model
        .layout
        .as_ref()
        .ok_or_else(|| HarnessError::Data("model has no fingerprint layout; pass a fingerprint table".into()))?;
    opts.kinds = layout.kinds.clone();
    opts.k_grid = Some(layout.k_grid);
    let data = load_dataset(&DatasetConfig::new(input))?;
    let threads = common.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let batch = fingerprint_dataset(&data.graphs(), &opts, threads)?;
    let targets = data
        .records
        .iter()
        .filter_map(|r| Some((r.record_id.clone(), r.target?)))
        .collect();
    Ok((batch.table, targets))
}

fn predict(common: &Common, model_path: &Path, input: &Path) -> Result<(), HarnessError> {
    let model = load_model(model_path)?;
    let (table, targets) = pool_table(common, &model, input)?;
    model.check_layout(&table.layout)?;
    let reports = model.predict(&table.features())?;
    let rows: Vec<PredictionRow> = table
        .ids
        .iter()
        .zip(&reports)
        .map(|(id, r)| PredictionRow::new(id, None, targets.get(id).copied(), r))
        .collect();
    let text = predictions_csv(&rows);
    match &common.out {
        Some(dir) => {
            let path = dir.join("predictions.csv");
            write_text(&path, &text)?;
            println!("{} predictions -> {}", rows.len(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn evaluate_file(common: &Common, path: &Path, task: Option<TaskArg>) -> Result<(), HarnessError> {
    let task = match (task, &common.config) {
        (Some(t), _) => t.into(),
        (None, Some(c)) => RunConfig::load(c)?.model.task,
        (None, None) => Task::RegressionWithUncertainty,
    };
    let rows = read_predictions_csv(File::open(path).map_err(|e| HarnessError::io(path, e))?)?;
    let labeled: Vec<&PredictionRow> = rows.iter().filter(|r| r.target.is_some()).collect();
    if labeled.is_empty() {
        return Err(HarnessError::Data(format!("{} has no targets", path.display())));
    }
    let mut groups: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &labeled {
        for key in ["all".to_string(), r.split.map_or("unsplit".into(), |s| s.name().to_string())] {
            let g = groups.entry(key).or_default();
            g.0.push(r.prediction);
            g.1.push(r.target.unwrap_or(f64::NAN));
        }
    }
    let mut out = BTreeMap::new();
    for (name, (p, y)) in groups {
        out.insert(name, evaluate(&p, &y, task)?);
    }
    let text = pretty(&out);
    if let Some(dir) = &common.out {
        write_text(&dir.join("metrics.json"), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn rank(common: &Common, model_path: &Path, input: &Path, criterion: Criterion, k: usize) -> Result<(), HarnessError> {
    let model = load_model(model_path)?;
    let (table, _) = pool_table(common, &model, input)?;
    model.check_layout(&table.layout)?;
    let reports = model.predict(&table.features())?;
    let scores: Vec<f64> = reports.iter().map(|r| criterion.score(r)).collect();
    let top = rank_scores(&table.ids, &scores, k);
    let by_id: BTreeMap<&str, f64> = table.ids.iter().map(String::as_str).zip(scores.iter().copied()).collect();
    let mut text = String::from("rank,id,score\n");
    for (i, id) in top.iter().enumerate() {
        text.push_str(&format!("{},{},{}\n", i + 1, id, by_id[id.as_str()]));
    }
    if let Some(dir) = &common.out {
        write_text(&dir.join("ranking.csv"), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn molecule(arg: &str) -> Result<MolecularGraph, HarnessError> {
    let path = Path::new(arg);
    if path.extension().is_some_and(|e| e == "json") && path.is_file() {
        load_graph_json(path, Strictness::Lenient).map_err(|e| HarnessError::Data(format!("{arg}: {e}")))
    } else {
        parse_smiles(arg).map_err(|e| HarnessError::Data(format!("{arg}: {e}")))
    }
}

fn distance(common: &Common, a: &str, b: &str, p: f64, fp: &FingerprintFlags) -> Result<(), HarnessError> {
    if !(p >= 1.0) {
        return Err(HarnessError::Config("p must be at least 1".into()));
    }
    let ga = molecule(a)?;
    let gb = molecule(b)?;
    let base = match &common.config {
        Some(c) => RunConfig::load(c)?.fingerprint,
        None => FingerprintOptions::default(),
    };
    let kinds = match &fp.kinds {
        Some(k) => k.clone(),
        None if ga.has_partial_charges() && gb.has_partial_charges() => base.kinds.clone(),
        None => {
            log::info!("no partial charges; leaving out PC");
            base.kinds.iter().copied().filter(|&k| k != FiltrationKind::PartialCharge).collect()
        }
    };
    let k_grid = fp.k_grid.or(base.k_grid).unwrap_or_else(|| auto_k_grid([&ga, &gb]));
    let specs: Vec<FiltrationSpec> = kinds.iter().map(|&k| FiltrationSpec::new(k)).collect();
    let report = compare_pair("pair", &ga, &gb, &specs, k_grid, &base.homology, p)?;
    let text = pretty(&report);
    if let Some(dir) = &common.out {
        write_text(&dir.join("distance.json"), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn bench(cfg: &RunConfig) -> Result<(), HarnessError> {
    let o = run_benchmark(cfg)?;
    let metric = match o.report.task {
        Task::RegressionWithUncertainty => "rmse",
        Task::BinaryClassification => "roc_auc",
    };
    println!("{} records, {} skipped, layout {}", o.report.n_records, o.report.n_skipped, o.report.layout);
    for v in &o.report.variants {
        if let Some(s) = v.summary.get(&Split::Test).and_then(|m| m.get(metric)) {
            println!("{:>8}  test {metric} {:.4} ± {:.4}", v.name, s.mean, s.std);
        }
    }
    if let Some(b) = o.report.baseline.as_ref().and_then(|b| b.get(&Split::Test)) {
        println!("{:>8}  test {metric} {:.4}", "baseline", b.values()[0].1);
    }
    println!(
        "fingerprinting {:.2}s, training {:.2}s, inference {:.2}s -> {}",
        o.timing.fingerprinting,
        o.timing.training,
        o.timing.inference,
        cfg.out.display()
    );
    Ok(())
}
