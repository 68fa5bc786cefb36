//! Command-line front end. Every subcommand is a thin wrapper over a library
//! call; outputs land under `--out` as `results/`, `figures/` and `manifests/`.
//!
//! Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::curvedata::csv_io::SCHEMA_HELP;
use crate::curvedata::{load_csv_with_tol, save_csv, synthesize_dataset, validate_record, ClassSpec, Dataset, REAL_DATA_TOL};
use crate::error::{Error, Result};
use crate::experiments::{
    self, apply_filter, delaunay::Statistic, pca, regression, resolve_dataset, unix_now, DatasetSelector,
    ExperimentConfig, OutputDir, RunManifest, Transform,
};
use crate::models::{ModelKind, TrainedModel};
use crate::svg::emit_svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const CONFIG_HELP: &str = "\
Experiment config (JSON):
  {
    \"name\": \"exp49\",
    \"dataset\": {\"kind\": \"file\", \"path\": \"data/lmfdb_sample_4_9.csv\", \"tol\": 1e-4}
              | {\"kind\": \"api\", \"query\": {\"conductor_below\": 500000, \"rank\": 0}, \"limit\": 5000}
              | {\"kind\": \"synthetic\", \"n\": 10000, \"classes\": \"4:1,9:1\", \"seed\": 42},
    \"filter\": {\"sha_in\": [4, 9], \"min_rank\": null, \"max_rank\": null, \"balance\": true},
    \"features\": {\"features\": [\"special_value\", ...], \"log_transform\": [true, ...], \"standardize\": true},
    \"model\": \"logistic\" | \"mlp\" | \"gbm\",
    \"train\": {\"seed\": 42, \"logistic\": {...}, \"mlp\": {...}, \"gbm\": {...}},
    \"split\": {\"test_fraction\": 0.2, \"seed\": 42},
    \"holdout\": <dataset selector, optional>,
    \"output_dir\": \"out\"
  }
A run manifest (manifests/*.json) is accepted wherever a config is.";

#[derive(Debug, Parser)]
#[command(name = "shaml", version, about = "Predict |Sha| of elliptic curves from BSD invariants")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Experiment config or run manifest (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input CSV; overrides the config's dataset.
    #[arg(long = "in", global = true)]
    input: Option<PathBuf>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config's training seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Relative BSD tolerance for CSV ingestion.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Allow network access for API datasets.
    #[arg(long, global = true)]
    download: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a CSV or API dataset, validate it and write it under --out.
    Ingest,
    /// Generate a synthetic BSD-consistent dataset.
    Synth {
        #[arg(long, default_value_t = 10_000)]
        rows: usize,
        /// Class weights, e.g. `4:1,9:1`.
        #[arg(long, default_value = "4:1,9:1")]
        classes: String,
    },
    /// Check every row of --in against the BSD identity.
    Validate,
    /// Remove-one-feature ablation over all models, raw and log.
    Ablate,
    /// MLP ablation with and without the a_p columns.
    Apcompare,
    /// sqrt|Sha| regression suite.
    Regress,
    /// Regression per rank stratum.
    Stratify,
    /// Divisibility proportions against Delaunay's heuristics.
    Delaunay,
    /// PCA loadings, scatter and correlation table.
    Pca {
        /// Restrict to the N most frequent |Sha| values.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Train models without the special value and predict E29 (or the rows of --in).
    Predict {
        /// Saved model (JSON) to apply to --in instead of training.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Logistic, OLS and GBM on all BSD features.
    Benchmark,
    /// Summarize the manifests under --out.
    Report,
}

/// Parse `argv` (including the program name) and run. Never panics on bad input.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            if code == EXIT_USAGE {
                eprintln!("\n{SCHEMA_HELP}\n\n{CONFIG_HELP}");
            }
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(code) => code,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}\n\n{CONFIG_HELP}");
            EXIT_USAGE
        }
        Err(e @ (Error::MissingColumn(_) | Error::Parse { .. })) => {
            eprintln!("error: {e}\n\n{SCHEMA_HELP}");
            EXIT_FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

/// Read an experiment config, or the config embedded in a run manifest.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg = match serde_json::from_str::<ExperimentConfig>(&s) {
        Ok(cfg) => cfg,
        Err(e) => match serde_json::from_str::<RunManifest>(&s) {
            Ok(m) => m.config,
            Err(_) => return Err(Error::Config(format!("{}: {e}", path.display()))),
        },
    };
    cfg.features.validate()?;
    Ok(cfg)
}

fn effective_config(c: &Common, name: &str) -> Result<ExperimentConfig> {
    let mut cfg = match (&c.config, &c.input) {
        (Some(p), _) => load_config(p)?,
        (None, Some(p)) => ExperimentConfig::new(
            name,
            DatasetSelector::File {
                path: p.clone(),
                tol: REAL_DATA_TOL,
            },
        ),
        (None, None) => return Err(Error::Config(format!("`{name}` needs --config or --in"))),
    };
    if let (Some(_), Some(p)) = (&c.config, &c.input) {
        let tol = match &cfg.dataset {
            DatasetSelector::File { tol, .. } => *tol,
            _ => REAL_DATA_TOL,
        };
        cfg.dataset = DatasetSelector::File { path: p.clone(), tol };
    }
    if let (Some(t), DatasetSelector::File { tol, .. }) = (c.tol, &mut cfg.dataset) {
        *tol = t;
    }
    if let Some(s) = c.seed {
        cfg.train.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

struct Run {
    cfg: ExperimentConfig,
    ds: Dataset,
    out: OutputDir,
    started: u64,
}

impl Run {
    fn start(c: &Common, name: &str) -> Result<Run> {
        let started = unix_now();
        let cfg = effective_config(c, name)?;
        let ds = apply_filter(&resolve_dataset(&cfg.dataset, c.download)?, &cfg.filter, cfg.seed())?;
        log::info!("{name}: {} curves", ds.len());
        let out = OutputDir::create(&cfg.output_dir)?;
        Ok(Run { cfg, ds, out, started })
    }

    fn finish(&self, experiment: &str, metrics: BTreeMap<String, f64>) -> Result<i32> {
        let path = RunManifest::new(&self.cfg, experiment, &self.ds, self.started, metrics).write(&self.out)?;
        println!("manifest: {}", path.display());
        Ok(EXIT_OK)
    }

    fn classes(&self) -> Result<Vec<u64>> {
        self.cfg
            .filter
            .sha_in
            .clone()
            .ok_or_else(|| Error::Config("this experiment needs `filter.sha_in` with two classes".into()))
    }
}

fn run(cli: &Cli) -> Result<i32> {
    let c = &cli.common;
    match &cli.command {
        Command::Ingest => ingest(c),
        Command::Synth { rows, classes } => synth(c, *rows, classes),
        Command::Validate => validate(c),
        Command::Ablate => ablate(c),
        Command::Apcompare => apcompare(c),
        Command::Regress => regress(c),
        Command::Stratify => stratify(c),
        Command::Delaunay => delaunay(c),
        Command::Pca { top } => pca_cmd(c, *top),
        Command::Predict { model } => predict(c, model.as_deref()),
        Command::Benchmark => benchmark(c),
        Command::Report => report(c),
    }
}

fn ingest(c: &Common) -> Result<i32> {
    let r = Run::start(c, "ingest")?;
    let path = r.out.result("dataset.csv");
    save_csv(&r.ds, &path)?;
    println!("wrote {} curves to {}", r.ds.len(), path.display());
    r.finish("ingest", BTreeMap::from([("rows".to_string(), r.ds.len() as f64)]))
}

fn synth(c: &Common, rows: usize, classes: &str) -> Result<i32> {
    let spec = ClassSpec::parse(classes)?;
    let seed = c.seed.unwrap_or(42);
    let ds = synthesize_dataset(rows, &spec, seed)?;
    let out = OutputDir::create(c.out.clone().unwrap_or_else(|| PathBuf::from("out")))?;
    let path = out.result("synthetic.csv");
    save_csv(&ds, &path)?;
    println!("wrote {} synthetic curves to {}", ds.len(), path.display());
    Ok(EXIT_OK)
}

fn validate(c: &Common) -> Result<i32> {
    let path = c
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("`validate` needs --in".into()))?;
    let tol = c.tol.unwrap_or(REAL_DATA_TOL);
    // Load without the BSD gate so every row is checked and reported here.
    let (ds, report) = load_csv_with_tol(path, f64::INFINITY)?;
    let mut failed = report.dropped.len();
    for rec in &ds.records {
        let v = validate_record(rec, tol);
        if !v.passed {
            failed += 1;
            println!("FAIL {}: {}", v.label, v.reasons.join("; "));
        }
    }
    for d in &report.dropped {
        println!("FAIL row {} ({}): {}", d.row, d.label, d.reasons.join("; "));
    }
    let total = report.rows_read;
    let rate = if total == 0 { 0.0 } else { (total - failed) as f64 / total as f64 };
    println!("{} of {} rows pass at tol {tol:e} (pass rate {rate:.6})", total - failed, total);
    Ok(if failed == 0 && total > 0 { EXIT_OK } else { EXIT_FAILURE })
}

fn ablate(c: &Common) -> Result<i32> {
    let r = Run::start(c, "ablate")?;
    let res = experiments::run_remove_one_ablation(
        &r.ds,
        &r.classes()?,
        &r.cfg.features.features,
        &ModelKind::ALL,
        &r.cfg.train,
        r.cfg.split,
    )?;
    res.write_csv(r.out.result("ablation.csv"))?;
    emit_svg(&res.plot("Test accuracy with one feature deleted"), r.out.figure("ablation.svg"))?;
    let metrics = res
        .cells
        .iter()
        .filter_map(|cell| {
            let key = format!("{}/{}/{}", cell.model, cell.transform, cell.deleted_name());
            cell.accuracy.map(|a| (key, a))
        })
        .collect();
    r.finish("ablate", metrics)
}

fn apcompare(c: &Common) -> Result<i32> {
    let r = Run::start(c, "apcompare")?;
    let transform = if r.cfg.features.log_transform.iter().any(|&b| b) {
        Transform::Log
    } else {
        Transform::Raw
    };
    let res = experiments::run_ap_comparison(
        &r.ds,
        &r.classes()?,
        &r.cfg.features.features,
        transform,
        &r.cfg.train,
        r.cfg.split,
    )?;
    res.write_csv(r.out.result("ap_comparison.csv"))?;
    emit_svg(&res.plot("MLP accuracy with and without a_p"), r.out.figure("ap_comparison.svg"))?;
    let mut metrics = BTreeMap::new();
    for (tag, grid) in [("without_ap", &res.without_ap), ("with_ap", &res.with_ap)] {
        for cell in &grid.cells {
            if let Some(a) = cell.accuracy {
                metrics.insert(format!("{tag}/{}", cell.deleted_name()), a);
            }
        }
    }
    r.finish("apcompare", metrics)
}

fn regress(c: &Common) -> Result<i32> {
    let r = Run::start(c, "regress")?;
    let large = r
        .cfg
        .holdout
        .as_ref()
        .map(|h| resolve_dataset(h, c.download))
        .transpose()?;
    let suite = experiments::run_regression_suite(&r.ds, large.as_ref(), &r.cfg.train, r.cfg.split)?;
    suite.write_csv(r.out.result("regression.csv"))?;
    r.out.write_json("regression_importance.json", &suite.importance)?;
    emit_svg(&suite.threshold_plot(), r.out.figure("regression_thresholds.svg"))?;
    let mut metrics = BTreeMap::new();
    for cell in suite.cells.iter().chain(&suite.baselines) {
        metrics.insert(format!("{}/{}/accuracy", cell.feature_set, cell.test_set), cell.report.accuracy);
        metrics.insert(format!("{}/{}/mcc", cell.feature_set, cell.test_set), cell.report.mcc);
    }
    r.finish("regress", metrics)
}

fn stratify(c: &Common) -> Result<i32> {
    let r = Run::start(c, "stratify")?;
    let cells = experiments::run_rank_stratified(&r.ds, &r.cfg.train, r.cfg.split)?;
    regression::write_strata_csv(&cells, r.out.result("strata.csv"))?;
    for stratum in ["rank_0", "rank_positive"] {
        emit_svg(&regression::strata_plot(&cells, stratum), r.out.figure(&format!("strata_{stratum}.svg")))?;
    }
    let mut metrics = BTreeMap::new();
    for cell in &cells {
        metrics.insert(format!("{}/{}/accuracy", cell.stratum, cell.feature_set), cell.report.accuracy);
        metrics.insert(format!("{}/{}/mcc", cell.stratum, cell.feature_set), cell.report.mcc);
    }
    r.finish("stratify", metrics)
}

fn delaunay(c: &Common) -> Result<i32> {
    let r = Run::start(c, "delaunay")?;
    let res = experiments::run_delaunay_analysis(&r.ds, &[2, 3], &[0, 1])?;
    res.write_csv(r.out.result("delaunay_series.csv"), r.out.result("delaunay_table.csv"))?;
    for (stat, file) in [
        (Statistic::Trivial, "delaunay_trivial.svg"),
        (Statistic::Divisible(2), "delaunay_div2.svg"),
        (Statistic::Divisible(3), "delaunay_div3.svg"),
    ] {
        match emit_svg(&res.plot(stat), r.out.figure(file)) {
            Err(Error::EmptyData) => log::warn!("{file}: no data to plot"),
            other => other?,
        }
    }
    let mut metrics = BTreeMap::new();
    println!("{:<10} {:>4} {:>10} {:>10} {:>10}", "statistic", "rank", "heuristic", "observed", "reference");
    for t in &res.table {
        println!(
            "{:<10} {:>4} {:>10.6} {:>10} {:>10.6}",
            t.statistic.name(),
            t.rank,
            t.heuristic,
            t.observed.map_or("-".to_string(), |o| format!("{o:.6}")),
            t.reference_observed
        );
        if let Some(o) = t.observed {
            metrics.insert(format!("{}/rank_{}", t.statistic.name(), t.rank), o);
        }
    }
    r.finish("delaunay", metrics)
}

fn pca_cmd(c: &Common, top: Option<usize>) -> Result<i32> {
    let mut r = Run::start(c, "pca")?;
    if let Some(n) = top {
        r.ds = pca::top_sha_subset(&r.ds, n);
    }
    let a = experiments::run_pca_analysis(&r.ds, &r.cfg.features.features)?;
    a.write_loadings_csv(r.out.result("pca_loadings.csv"))?;
    a.write_variance_csv(r.out.result("pca_variance.csv"))?;
    a.write_correlation_csv(r.out.result("correlation.csv"))?;
    emit_svg(&a.scatter("PC1 vs PC2"), r.out.figure("pca_scatter.svg"))?;
    let ratios = &a.result.explained_variance_ratio;
    println!("explained variance: PC1 {:.4}, PC2 {:.4}", ratios[0], ratios[1]);
    let metrics = ratios
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("PC{}_ratio", i + 1), *v))
        .collect();
    r.finish("pca", metrics)
}

fn predict(c: &Common, model: Option<&Path>) -> Result<i32> {
    if let Some(path) = model {
        let input = c
            .input
            .as_ref()
            .ok_or_else(|| Error::Config("`predict --model` needs --in".into()))?;
        let m = TrainedModel::load(path)?;
        let (ds, _) = load_csv_with_tol(input, f64::INFINITY)?;
        let pred = m.predict_dataset(&ds)?;
        let out = OutputDir::create(c.out.clone().unwrap_or_else(|| PathBuf::from("out")))?;
        let p = out.result("predictions.csv");
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(["label", "prediction"])?;
        for (rec, v) in ds.records.iter().zip(&pred) {
            w.write_record([rec.label.clone(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
        println!("wrote {} predictions to {}", pred.len(), p.display());
        return Ok(EXIT_OK);
    }
    // With a config, --in names the curves to predict; without one, it is the training data.
    let (train_args, targets_path) = if c.config.is_some() {
        (Common { input: None, ..c.clone() }, c.input.clone())
    } else {
        (c.clone(), None)
    };
    let r = Run::start(&train_args, "predict")?;
    let models = experiments::train_single_curve_models(&r.ds, &r.cfg.train, r.cfg.split)?;
    models.regressor.save(r.out.result("single_curve_regressor.json"))?;
    models.classifier.save(r.out.result("single_curve_classifier.json"))?;
    let targets = match targets_path {
        Some(p) => load_csv_with_tol(p, f64::INFINITY)?.0.records,
        None => vec![experiments::e29_record()],
    };
    let preds = targets
        .iter()
        .map(|rec| experiments::predict_single_curve(&models, rec))
        .collect::<Result<Vec<_>>>()?;
    r.out.write_json("single_curve_predictions.json", &preds)?;
    for p in &preds {
        println!(
            "{}: |Sha| = {} (raw sqrt {:.4}), P(trivial) = {:.4}",
            p.label, p.sha, p.raw_sqrt_sha, p.trivial_probability
        );
    }
    let mut metrics = BTreeMap::from([
        ("regressor_test_accuracy".to_string(), models.regressor_test.accuracy),
        ("classifier_test_accuracy".to_string(), models.classifier_test_accuracy),
    ]);
    if let Some(p) = preds.first() {
        metrics.insert(format!("{}/sha", p.label), p.sha as f64);
        metrics.insert(format!("{}/trivial_probability", p.label), p.trivial_probability);
    }
    r.finish("predict", metrics)
}

fn benchmark(c: &Common) -> Result<i32> {
    let r = Run::start(c, "benchmark")?;
    let res = experiments::run_all_bsd_benchmark(&r.ds, &r.classes()?, &r.cfg.train, r.cfg.split)?;
    res.write_csv(r.out.result("benchmark.csv"))?;
    let mut metrics: BTreeMap<String, f64> = res.rows.iter().map(|row| (row.name.clone(), row.accuracy)).collect();
    for row in &res.rows {
        println!("{:<14} accuracy {:.4}  mcc {:.4}", row.name, row.accuracy, row.mcc);
    }
    println!("ols exponents {:?} (max error {:.3e})", res.ols.coefficients, res.exponent_error());
    metrics.insert("ols_exponent_error".into(), res.exponent_error());
    r.finish("benchmark", metrics)
}

fn report(c: &Common) -> Result<i32> {
    let root = c
        .out
        .clone()
        .or_else(|| c.input.clone())
        .ok_or_else(|| Error::Config("`report` needs --out (the run directory)".into()))?;
    let dir = root.join("manifests");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let out = OutputDir::create(&root)?;
    let summary = out.result("summary.csv");
    let mut w = csv::Writer::from_path(&summary)?;
    w.write_record(["experiment", "config_hash", "seed", "threads", "rows", "metric", "value"])?;
    for p in &paths {
        let m = RunManifest::load(p)?;
        println!("{} ({} metrics, seed {}, {} rows)", m.experiment, m.metrics.len(), m.seed, m.dataset.rows);
        for (k, v) in &m.metrics {
            w.write_record([
                m.experiment.clone(),
                m.config_hash.clone(),
                m.seed.to_string(),
                m.threads.to_string(),
                m.dataset.rows.to_string(),
                k.clone(),
                v.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(&summary, e))?;
    println!("wrote {}", summary.display());
    Ok(EXIT_OK)
}
