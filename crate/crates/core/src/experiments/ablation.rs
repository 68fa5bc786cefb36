//! Remove-one-feature ablations over models and transforms.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_classifier, prepare_pair};
use crate::curvedata::{train_test_split, Dataset, Feature, SplitSpec};
use crate::error::{Error, Result};
use crate::featureng::{FeatureSpec, Target};
use crate::models::{ModelKind, TrainConfig};
use crate::svg::{Plot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Raw,
    Log,
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::Raw => "raw",
            Transform::Log => "log",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub model: ModelKind,
    pub transform: Transform,
    pub with_ap: bool,
    /// `None` is the full feature set.
    pub deleted: Option<Feature>,
    pub accuracy: Option<f64>,
    pub final_accuracy: Option<f64>,
    pub mcc: Option<f64>,
    pub error: Option<String>,
}

impl AblationCell {
    pub fn deleted_name(&self) -> String {
        self.deleted.map_or_else(|| "none".to_string(), |f| f.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub classes: Vec<u64>,
    pub n_train: usize,
    pub n_test: usize,
    pub cells: Vec<AblationCell>,
}

#[derive(Debug, Clone, Serialize)]
struct CsvRow<'a> {
    model: &'a str,
    transform: String,
    with_ap: bool,
    deleted: String,
    accuracy: Option<f64>,
    final_accuracy: Option<f64>,
    mcc: Option<f64>,
    error: Option<&'a str>,
}

impl AblationResult {
    pub fn cell(&self, model: ModelKind, transform: Transform, deleted: Option<Feature>) -> Option<&AblationCell> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.transform == transform && c.deleted == deleted)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        for c in &self.cells {
            w.serialize(CsvRow {
                model: c.model.name(),
                transform: c.transform.to_string(),
                with_ap: c.with_ap,
                deleted: c.deleted_name(),
                accuracy: c.accuracy,
                final_accuracy: c.final_accuracy,
                mcc: c.mcc,
                error: c.error.as_deref(),
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Deleted feature on the x axis, one bar per (model, transform, a_p) series.
    pub fn plot(&self, title: &str) -> Plot {
        let mut deletions: Vec<Option<Feature>> = Vec::new();
        let mut keys: Vec<(ModelKind, Transform, bool)> = Vec::new();
        for c in &self.cells {
            if !deletions.contains(&c.deleted) {
                deletions.push(c.deleted);
            }
            if !keys.contains(&(c.model, c.transform, c.with_ap)) {
                keys.push((c.model, c.transform, c.with_ap));
            }
        }
        let series = keys
            .iter()
            .map(|&(m, t, ap)| {
                let name = if ap { format!("{m} {t} +ap") } else { format!("{m} {t}") };
                let data = deletions
                    .iter()
                    .map(|d| {
                        self.cells
                            .iter()
                            .find(|c| c.model == m && c.transform == t && c.with_ap == ap && c.deleted == *d)
                            .and_then(|c| c.accuracy)
                    })
                    .collect();
                Series::new(name, data)
            })
            .collect();
        Plot::GroupedBars {
            title: title.to_string(),
            x_label: "feature deleted".into(),
            y_label: "test accuracy".into(),
            categories: deletions
                .iter()
                .map(|d| d.map_or_else(|| "none".to_string(), |f| f.name()))
                .collect(),
            series,
        }
    }
}

struct CellSpec {
    model: ModelKind,
    transform: Transform,
    deleted: Option<Feature>,
}

#[allow(clippy::too_many_arguments)]
fn run_grid(
    ds: &Dataset,
    classes: &[u64],
    features: &[Feature],
    models: &[ModelKind],
    transforms: &[Transform],
    with_ap: bool,
    cfg: &TrainConfig,
    split: SplitSpec,
) -> Result<AblationResult> {
    let (train, test) = train_test_split(ds, split)?;
    let target = Target::ShaClass(classes.to_vec());
    let mut specs = Vec::new();
    for &model in models {
        for &transform in transforms {
            for deleted in std::iter::once(None).chain(features.iter().copied().map(Some)) {
                specs.push(CellSpec {
                    model,
                    transform,
                    deleted,
                });
            }
        }
    }
    // Cells are independent and each is deterministic, so parallel order is irrelevant.
    let cells = specs
        .par_iter()
        .map(|s| {
            let kept: Vec<Feature> = features.iter().copied().filter(|f| Some(*f) != s.deleted).collect();
            let mut spec = FeatureSpec::new(kept, s.transform == Transform::Log, true);
            spec.include_ap = with_ap;
            let outcome = prepare_pair(&train, &test, &spec, &target)
                .and_then(|(a, b)| fit_classifier(s.model, &a, &b, cfg));
            let mut cell = AblationCell {
                model: s.model,
                transform: s.transform,
                with_ap,
                deleted: s.deleted,
                accuracy: None,
                final_accuracy: None,
                mcc: None,
                error: None,
            };
            match outcome {
                Ok((_, o)) => {
                    cell.accuracy = Some(o.accuracy);
                    cell.final_accuracy = o.final_accuracy;
                    cell.mcc = Some(o.report.mcc);
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect();
    Ok(AblationResult {
        classes: classes.to_vec(),
        n_train: train.len(),
        n_test: test.len(),
        cells,
    })
}

/// Every model on raw and log features, deleting each feature in turn.
/// Features are z-scored in both transforms.
pub fn run_remove_one_ablation(
    ds: &Dataset,
    classes: &[u64],
    features: &[Feature],
    models: &[ModelKind],
    cfg: &TrainConfig,
    split: SplitSpec,
) -> Result<AblationResult> {
    check_binary(classes)?;
    run_grid(ds, classes, features, models, &[Transform::Raw, Transform::Log], false, cfg, split)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApComparison {
    pub without_ap: AblationResult,
    pub with_ap: AblationResult,
}

impl ApComparison {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let merged = AblationResult {
            cells: self.without_ap.cells.iter().chain(&self.with_ap.cells).cloned().collect(),
            ..self.without_ap.clone()
        };
        merged.write_csv(path)
    }

    pub fn plot(&self, title: &str) -> Plot {
        let merged = AblationResult {
            cells: self.without_ap.cells.iter().chain(&self.with_ap.cells).cloned().collect(),
            ..self.without_ap.clone()
        };
        merged.plot(title)
    }
}

/// MLP ablation grids without and with the 100 `a_p` columns.
pub fn run_ap_comparison(
    ds: &Dataset,
    classes: &[u64],
    features: &[Feature],
    transform: Transform,
    cfg: &TrainConfig,
    split: SplitSpec,
) -> Result<ApComparison> {
    check_binary(classes)?;
    if ds.is_empty() || !ds.records.iter().all(|r| r.ap_values.is_some()) {
        return Err(Error::MissingApColumns);
    }
    let models = [ModelKind::Mlp];
    Ok(ApComparison {
        without_ap: run_grid(ds, classes, features, &models, &[transform], false, cfg, split)?,
        with_ap: run_grid(ds, classes, features, &models, &[transform], true, cfg, split)?,
    })
}

fn check_binary(classes: &[u64]) -> Result<()> {
    if classes.len() != 2 {
        return Err(Error::Config(format!("ablations compare two classes, got {classes:?}")));
    }
    Ok(())
}
