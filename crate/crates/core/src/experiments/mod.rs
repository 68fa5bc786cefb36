//! Experiment orchestration: configs, dataset resolution, manifests and the
//! individual studies (ablations, regression suite, Delaunay proportions,
//! PCA, single-curve prediction, the all-BSD benchmark).

pub mod ablation;
pub mod benchmark;
pub mod delaunay;
pub mod pca;
pub mod regression;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use ablation::{run_ap_comparison, run_remove_one_ablation, AblationCell, AblationResult, ApComparison, Transform};
pub use benchmark::{run_all_bsd_benchmark, BenchmarkResult};
pub use delaunay::{conductor_grid, run_delaunay_analysis, DelaunayResult, HEURISTIC_TABLE};
pub use pca::{run_pca_analysis, PcaAnalysis};
pub use regression::{
    e29_record, predict_single_curve, run_rank_stratified, run_regression_suite, train_single_curve_models,
    RegressionCell, RegressionSuite, SingleCurveModels, SingleCurvePrediction, StratumCell,
};

use crate::curvedata::{
    balanced_subset, fetch_lmfdb, load_csv_with_tol, synthesize_dataset, ClassField, ClassSpec, Dataset, Fingerprint,
    LmfdbClient, LmfdbQuery, SplitSpec, REAL_DATA_TOL,
};
use crate::error::{Error, Result};
use crate::featureng::{prepare, scale_for_spec, FeatureMatrix, FeatureSpec, Target};
use crate::metrics::{evaluate_binary, EvaluationReport};
use crate::models::{gbm_fit, logistic_fit, mlp_fit, GbmTask, ModelKind, ModelParams, TrainConfig};

fn default_tol() -> f64 {
    REAL_DATA_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSelector {
    File {
        path: PathBuf,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Api {
        #[serde(default)]
        query: LmfdbQuery,
        limit: usize,
    },
    Synthetic {
        n: usize,
        classes: ClassSpec,
        seed: u64,
    },
}

/// Row filter applied after loading.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassFilter {
    pub sha_in: Option<Vec<u64>>,
    pub min_rank: Option<u32>,
    pub max_rank: Option<u32>,
    /// Subsample to equal class sizes over `sha_in`.
    pub balance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSelector,
    #[serde(default)]
    pub filter: ClassFilter,
    #[serde(default = "default_features")]
    pub features: FeatureSpec,
    #[serde(default = "default_model")]
    pub model: ModelKind,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub split: SplitSpec,
    /// Fully held-out evaluation set, e.g. large-conductor curves.
    #[serde(default)]
    pub holdout: Option<DatasetSelector>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_features() -> FeatureSpec {
    FeatureSpec::bsd(true, true)
}

fn default_model() -> ModelKind {
    ModelKind::Gbm
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, dataset: DatasetSelector) -> Self {
        ExperimentConfig {
            name: name.into(),
            dataset,
            filter: ClassFilter::default(),
            features: default_features(),
            model: default_model(),
            train: TrainConfig::default(),
            split: SplitSpec::default(),
            holdout: None,
            output_dir: default_output(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&s)?;
        cfg.features.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form; identifies the run together with the seed.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        crate::curvedata::dataset::hex(&Sha256::digest(json))
    }

    pub fn seed(&self) -> u64 {
        self.train.seed
    }
}

pub fn resolve_dataset(sel: &DatasetSelector, allow_download: bool) -> Result<Dataset> {
    match sel {
        DatasetSelector::File { path, tol } => {
            let (ds, report) = load_csv_with_tol(path, *tol)?;
            if !report.dropped.is_empty() {
                log::info!("{}: kept {} of {} rows", path.display(), ds.len(), report.rows_read);
            }
            Ok(ds)
        }
        DatasetSelector::Api { query, limit } => {
            if !allow_download {
                return Err(Error::Config("API datasets need network access; pass --download".into()));
            }
            fetch_lmfdb(&LmfdbClient::from_env(), query, *limit)
        }
        DatasetSelector::Synthetic { n, classes, seed } => synthesize_dataset(*n, classes, *seed),
    }
}

pub fn apply_filter(ds: &Dataset, filter: &ClassFilter, seed: u64) -> Result<Dataset> {
    let kept = ds.filter("class_filter", |r| {
        filter.sha_in.as_ref().is_none_or(|s| r.sha_order.is_some_and(|v| s.contains(&v)))
            && filter.min_rank.is_none_or(|m| r.rank >= m)
            && filter.max_rank.is_none_or(|m| r.rank <= m)
    });
    match (&filter.sha_in, filter.balance) {
        (Some(classes), true) => balanced_subset(&kept, ClassField::ShaOrder, classes, seed),
        (None, true) => Err(Error::Config("balance requires sha_in".into())),
        _ => Ok(kept),
    }
}

/// Load, filter and (optionally) balance the dataset named by `cfg`.
pub fn load_experiment_dataset(cfg: &ExperimentConfig, allow_download: bool) -> Result<Dataset> {
    apply_filter(&resolve_dataset(&cfg.dataset, allow_download)?, &cfg.filter, cfg.seed())
}

/// Output tree: `results/*.csv`, `figures/*.svg`, `manifests/*.json`.
#[derive(Debug, Clone)]
pub struct OutputDir {
    pub root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in ["results", "figures", "manifests"] {
            let p = root.join(sub);
            std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
        Ok(OutputDir { root })
    }

    pub fn result(&self, name: &str) -> PathBuf {
        self.root.join("results").join(name)
    }

    pub fn figure(&self, name: &str) -> PathBuf {
        self.root.join("figures").join(name)
    }

    pub fn manifest(&self, name: &str) -> PathBuf {
        self.root.join("manifests").join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.result(name);
        let s = serde_json::to_string_pretty(value)?;
        std::fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub dataset: Fingerprint,
    pub tool_version: String,
    pub metrics: BTreeMap<String, f64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config: ExperimentConfig,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, experiment: &str, ds: &Dataset, started_unix: u64, metrics: BTreeMap<String, f64>) -> Self {
        RunManifest {
            experiment: experiment.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed(),
            threads: rayon::current_num_threads(),
            dataset: ds.fingerprint(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            metrics,
            started_unix,
            finished_unix: unix_now(),
            config: cfg.clone(),
        }
    }

    pub fn write(&self, out: &OutputDir) -> Result<PathBuf> {
        let path = out.manifest(&format!("{}.json", self.experiment));
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }
}

/// Build train/test matrices for `spec` and scale with training statistics.
pub fn prepare_pair(train: &Dataset, test: &Dataset, spec: &FeatureSpec, target: &Target) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let a = prepare(train, spec, target)?;
    let b = prepare(test, spec, target)?;
    scale_for_spec(&a, &b, spec)
}

/// Result of fitting one binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOutcome {
    /// Best-epoch test accuracy for the MLP, plain test accuracy otherwise.
    pub accuracy: f64,
    /// MLP only.
    pub final_accuracy: Option<f64>,
    pub report: EvaluationReport,
}

pub fn fit_classifier(
    kind: ModelKind,
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    cfg: &TrainConfig,
) -> Result<(ModelParams, ClassifierOutcome)> {
    let truth = test.class_labels();
    let (params, final_accuracy) = match kind {
        ModelKind::Logistic => (ModelParams::Logistic(logistic_fit(train, cfg)?), None),
        ModelKind::Gbm => (ModelParams::Gbm(gbm_fit(train, cfg, GbmTask::Classify)?), None),
        ModelKind::Mlp => {
            let fit = mlp_fit(train, test, cfg)?;
            (ModelParams::Mlp(fit.model), Some(fit.final_test_accuracy))
        }
    };
    let pred: Vec<usize> = params.predict(&test.x)?.into_iter().map(|v| v as usize).collect();
    let report = evaluate_binary(&pred, &truth)?;
    Ok((
        params,
        ClassifierOutcome {
            accuracy: report.accuracy,
            final_accuracy,
            report,
        },
    ))
}
