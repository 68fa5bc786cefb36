//! All-BSD-feature benchmark: logistic on raw and log features, OLS exponent
//! recovery, GBM on raw and log features.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fit_classifier, prepare_pair};
use crate::curvedata::{train_test_split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::featureng::{prepare, FeatureSpec, Target};
use crate::models::{ModelKind, TrainConfig};
use crate::numcore::{ols_fit, OlsFit};

/// Exponents of (L, torsion, Omega, Reg, tamagawa) in the BSD formula for |Sha|.
pub const BSD_EXPONENTS: [f64; 5] = [1.0, 2.0, -1.0, -1.0, -1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub name: String,
    pub accuracy: f64,
    pub mcc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub classes: Vec<u64>,
    pub rows: Vec<BenchmarkRow>,
    /// ln|Sha| regressed on the log BSD features over the whole dataset.
    pub ols: OlsFit,
}

impl BenchmarkResult {
    pub fn row(&self, name: &str) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Largest deviation of the fitted exponents from [`BSD_EXPONENTS`].
    pub fn exponent_error(&self) -> f64 {
        self.ols
            .coefficients
            .iter()
            .zip(BSD_EXPONENTS)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["name", "accuracy", "mcc", "detail"])?;
        for r in &self.rows {
            w.write_record([r.name.clone(), r.accuracy.to_string(), r.mcc.to_string(), String::new()])?;
        }
        let exps: Vec<String> = self.ols.coefficients.iter().map(|c| format!("{c:.9}")).collect();
        w.write_record([
            "ols_exponents".to_string(),
            String::new(),
            String::new(),
            exps.join(" "),
        ])?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn run_all_bsd_benchmark(ds: &Dataset, classes: &[u64], cfg: &TrainConfig, split: SplitSpec) -> Result<BenchmarkResult> {
    let target = Target::ShaClass(classes.to_vec());
    let (train, test) = train_test_split(ds, split)?;
    let mut rows = Vec::new();
    for (name, kind, log) in [
        ("logistic_raw", ModelKind::Logistic, false),
        ("logistic_log", ModelKind::Logistic, true),
        ("gbm_raw", ModelKind::Gbm, false),
        ("gbm_log", ModelKind::Gbm, true),
    ] {
        let spec = FeatureSpec::bsd(log, true);
        let (a, b) = prepare_pair(&train, &test, &spec, &target)?;
        let (_, o) = fit_classifier(kind, &a, &b, cfg)?;
        rows.push(BenchmarkRow {
            name: name.to_string(),
            accuracy: o.accuracy,
            mcc: o.report.mcc,
        });
    }
    let m = prepare(ds, &FeatureSpec::bsd(true, false), &Target::None)?;
    let y: Vec<f64> = ds
        .records
        .iter()
        .map(|r| {
            r.sha_order.map(|s| (s as f64).ln()).ok_or_else(|| Error::MissingFeature {
                label: r.label.clone(),
                feature: "sha_order".into(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BenchmarkResult {
        classes: classes.to_vec(),
        rows,
        ols: ols_fit(&m.x, &y)?,
    })
}
