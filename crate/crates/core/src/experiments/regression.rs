//! Boosted-tree regression on sqrt|Sha|, rank-stratified runs and
//! single-curve prediction.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::prepare_pair;
use crate::curvedata::{train_test_split, CurveRecord, Dataset, Feature, SplitSpec};
use crate::error::{Error, Result};
use crate::featureng::{prepare, FeatureSpec, Target};
use crate::metrics::{evaluate_sqrt_sha, round_sqrt_sha, EvaluationReport};
use crate::models::{gbm_fit, GbmModel, GbmTask, ModelParams, TrainConfig, TrainedModel};
use crate::svg::{Plot, Series};

use Feature::*;

/// The regression feature sets compared in the suite.
pub fn suite_feature_sets() -> Vec<(&'static str, Vec<Feature>)> {
    vec![
        ("bsd", vec![SpecialValue, Torsion, RealPeriod, Regulator, Tamagawa]),
        ("rank_for_regulator", vec![SpecialValue, Torsion, RealPeriod, Rank, Tamagawa]),
        ("no_regulator_no_rank", vec![SpecialValue, Torsion, RealPeriod, Tamagawa]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionCell {
    pub feature_set: String,
    pub test_set: String,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSuite {
    pub cells: Vec<RegressionCell>,
    /// All-trivial predictor on each test set.
    pub baselines: Vec<RegressionCell>,
    /// Per feature set, (feature name, total gain) sorted descending.
    pub importance: Vec<(String, Vec<(String, f64)>)>,
}

#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    feature_set: &'a str,
    test_set: &'a str,
    accuracy: f64,
    mcc: f64,
    mcc_multiclass: Option<f64>,
    n: usize,
}

fn write_summary(cells: &[RegressionCell], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in cells {
        w.serialize(SummaryRow {
            feature_set: &c.feature_set,
            test_set: &c.test_set,
            accuracy: c.report.accuracy,
            mcc: c.report.mcc,
            mcc_multiclass: c.report.mcc_multiclass,
            n: c.report.n,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn threshold_plot(cells: &[RegressionCell], title: &str) -> Plot {
    let series = cells
        .iter()
        .filter_map(|c| {
            let pts: Vec<(f64, f64)> = c
                .report
                .threshold_curve
                .as_ref()?
                .iter()
                .filter_map(|p| p.accuracy.map(|a| (p.threshold, a)))
                .collect();
            (!pts.is_empty()).then(|| Series::new(format!("{} / {}", c.feature_set, c.test_set), pts))
        })
        .collect();
    Plot::Lines {
        title: title.to_string(),
        x_label: "sqrt|Sha| threshold".into(),
        y_label: "accuracy on curves at or above threshold".into(),
        log_x: false,
        series,
    }
}

impl RegressionSuite {
    pub fn cell(&self, feature_set: &str, test_set: &str) -> Option<&RegressionCell> {
        self.cells
            .iter()
            .find(|c| c.feature_set == feature_set && c.test_set == test_set)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let all: Vec<RegressionCell> = self.cells.iter().chain(&self.baselines).cloned().collect();
        write_summary(&all, path.as_ref())
    }

    pub fn threshold_plot(&self) -> Plot {
        threshold_plot(&self.cells, "Accuracy by sqrt|Sha| threshold")
    }
}

fn thresholds_for(truth: &[&[f64]]) -> Vec<f64> {
    let max = truth
        .iter()
        .flat_map(|t| t.iter())
        .fold(1.0f64, |m, &v| m.max(v.round()));
    (1..=max as u64).map(|t| t as f64).collect()
}

fn fit_regressor(train: &Dataset, tests: &[(&str, &Dataset)], features: &[Feature], cfg: &TrainConfig) -> Result<(GbmModel, Vec<(String, EvaluationReport)>, Vec<String>)> {
    let spec = FeatureSpec::new(features.to_vec(), false, false);
    let a = prepare(train, &spec, &Target::SqrtSha)?;
    let model = gbm_fit(&a, cfg, GbmTask::Regress)?;
    let mats = tests
        .iter()
        .map(|(name, ds)| Ok((name.to_string(), prepare(ds, &spec, &Target::SqrtSha)?)))
        .collect::<Result<Vec<_>>>()?;
    let ts = thresholds_for(&mats.iter().map(|(_, m)| m.y.as_slice()).collect::<Vec<_>>());
    let reports = mats
        .iter()
        .map(|(name, m)| Ok((name.clone(), evaluate_sqrt_sha(&model.predict(&m.x)?, &m.y, Some(&ts))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((model, reports, a.feature_names()))
}

/// GBM regression of sqrt|Sha| on three feature sets. Training uses
/// `1 - test_fraction` of `small`; `large` (if any) is evaluated untouched.
pub fn run_regression_suite(small: &Dataset, large: Option<&Dataset>, cfg: &TrainConfig, split: SplitSpec) -> Result<RegressionSuite> {
    let (train, test) = train_test_split(small, split)?;
    let mut tests: Vec<(&str, &Dataset)> = vec![("small_conductor", &test)];
    if let Some(l) = large {
        tests.push(("large_conductor", l));
    }
    let mut cells = Vec::new();
    let mut importance = Vec::new();
    for (name, feats) in suite_feature_sets() {
        let (model, reports, names) = fit_regressor(&train, &tests, &feats, cfg)?;
        for (test_set, report) in reports {
            cells.push(RegressionCell {
                feature_set: name.to_string(),
                test_set,
                report,
            });
        }
        importance.push((
            name.to_string(),
            model.feature_importance().into_iter().map(|(i, g)| (names[i].clone(), g)).collect(),
        ));
    }
    let baselines = tests
        .iter()
        .map(|(name, ds)| {
            let truth = prepare(ds, &FeatureSpec::new(vec![], false, false), &Target::SqrtSha)?.y;
            Ok(RegressionCell {
                feature_set: "all_trivial_baseline".into(),
                test_set: name.to_string(),
                report: evaluate_sqrt_sha(&vec![1.0; truth.len()], &truth, None)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegressionSuite {
        cells,
        baselines,
        importance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumCell {
    pub stratum: String,
    pub feature_set: String,
    pub report: EvaluationReport,
}

pub fn stratum_feature_sets() -> Vec<(&'static str, Vec<Feature>)> {
    vec![
        ("with_regulator", vec![SpecialValue, Torsion, RealPeriod, Tamagawa, Regulator]),
        ("with_rank", vec![SpecialValue, Torsion, RealPeriod, Tamagawa, Rank]),
        ("neither", vec![SpecialValue, Torsion, RealPeriod, Tamagawa]),
    ]
}

/// Separate trainings on rank 0 and positive-rank curves.
pub fn run_rank_stratified(ds: &Dataset, cfg: &TrainConfig, split: SplitSpec) -> Result<Vec<StratumCell>> {
    let strata = [
        ("rank_0", ds.filter("rank == 0", |r| r.rank == 0)),
        ("rank_positive", ds.filter("rank > 0", |r| r.rank > 0)),
    ];
    let mut out = Vec::new();
    for (name, sub) in &strata {
        if sub.is_empty() {
            return Err(Error::EmptyStratum(name.to_string()));
        }
        let (train, test) = train_test_split(sub, split)?;
        for (fs, feats) in stratum_feature_sets() {
            let (_, mut reports, _) = fit_regressor(&train, &[("test", &test)], &feats, cfg)?;
            out.push(StratumCell {
                stratum: name.to_string(),
                feature_set: fs.to_string(),
                report: reports.remove(0).1,
            });
        }
    }
    Ok(out)
}

pub fn write_strata_csv(cells: &[StratumCell], path: impl AsRef<Path>) -> Result<()> {
    let rows: Vec<RegressionCell> = cells
        .iter()
        .map(|c| RegressionCell {
            feature_set: c.feature_set.clone(),
            test_set: c.stratum.clone(),
            report: c.report.clone(),
        })
        .collect();
    write_summary(&rows, path.as_ref())
}

pub fn strata_plot(cells: &[StratumCell], stratum: &str) -> Plot {
    let rows: Vec<RegressionCell> = cells
        .iter()
        .filter(|c| c.stratum == stratum)
        .map(|c| RegressionCell {
            feature_set: c.feature_set.clone(),
            test_set: c.stratum.clone(),
            report: c.report.clone(),
        })
        .collect();
    threshold_plot(&rows, &format!("Threshold accuracy, {stratum}"))
}

/// Features available when the special value cannot be computed.
pub const SINGLE_CURVE_FEATURES: [Feature; 5] = [Rank, Torsion, RealPeriod, Regulator, Tamagawa];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleCurveModels {
    pub regressor: TrainedModel,
    pub classifier: TrainedModel,
    pub regressor_test: EvaluationReport,
    pub classifier_test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleCurvePrediction {
    pub label: String,
    pub raw_sqrt_sha: f64,
    pub sqrt_sha: u64,
    pub sha: u64,
    pub trivial_probability: f64,
}

/// A sqrt|Sha| regressor and a trivial-Sha classifier, both without the special value.
pub fn train_single_curve_models(ds: &Dataset, cfg: &TrainConfig, split: SplitSpec) -> Result<SingleCurveModels> {
    let (train, test) = train_test_split(ds, split)?;
    let spec = FeatureSpec::new(SINGLE_CURVE_FEATURES.to_vec(), false, false);

    let (a, b) = prepare_pair(&train, &test, &spec, &Target::SqrtSha)?;
    let reg = gbm_fit(&a, cfg, GbmTask::Regress)?;
    let regressor_test = evaluate_sqrt_sha(&reg.predict(&b.x)?, &b.y, None)?;

    let (a, b) = prepare_pair(&train, &test, &spec, &Target::TrivialSha)?;
    let cls = gbm_fit(&a, cfg, GbmTask::Classify)?;
    let pred = cls.predict(&b.x)?;
    let classifier_test_accuracy = crate::metrics::accuracy(&pred, &b.y)?;

    Ok(SingleCurveModels {
        regressor: TrainedModel::new(spec.clone(), Target::SqrtSha, None, cfg.clone(), ModelParams::Gbm(reg)),
        classifier: TrainedModel::new(spec, Target::TrivialSha, None, cfg.clone(), ModelParams::Gbm(cls)),
        regressor_test,
        classifier_test_accuracy,
    })
}

pub fn predict_single_curve(models: &SingleCurveModels, rec: &CurveRecord) -> Result<SingleCurvePrediction> {
    let ds = Dataset::new(vec![rec.clone()], crate::curvedata::Source::Memory)?;
    let raw = models.regressor.predict_dataset(&ds)?[0];
    let ModelParams::Gbm(cls) = &models.classifier.params else {
        return Err(Error::Config("single-curve classifier must be a GBM".into()));
    };
    let x = models.classifier.features_for(&ds)?.x;
    let trivial_probability = cls.predict_proba(&x)?[0];
    let sqrt_sha = round_sqrt_sha(raw)?;
    Ok(SingleCurvePrediction {
        label: rec.label.clone(),
        raw_sqrt_sha: raw,
        sqrt_sha,
        sha: sqrt_sha * sqrt_sha,
        trivial_probability,
    })
}

/// The rank-29 curve of Elkies and Klagsbrun. Its special value is unknown
/// and its conductor exceeds `u64`; the conductor is stored as 0 and is not
/// a model input.
pub fn e29_record() -> CurveRecord {
    CurveRecord {
        label: "E29".into(),
        conductor: 0,
        rank: 29,
        torsion_order: Some(1),
        real_period: Some(3.5090427060633615e-15),
        regulator: Some(433744182671713097629179252379019849.493842),
        tamagawa_product: Some(10725120),
        special_value: None,
        sha_order: None,
        ap_values: None,
        extras: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e29_has_no_special_value() {
        let r = e29_record();
        assert!(r.feature(SpecialValue).is_none());
        for f in SINGLE_CURVE_FEATURES {
            assert!(r.feature(f).is_some());
        }
    }

    #[test]
    fn thresholds_cover_max() {
        assert_eq!(thresholds_for(&[&[1.0, 3.0], &[2.0]]), vec![1.0, 2.0, 3.0]);
    }
}
