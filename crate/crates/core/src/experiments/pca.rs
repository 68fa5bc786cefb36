//! PCA of log-standardized invariants, plus the (Ω, r, torsion) correlation table.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curvedata::{Dataset, Feature, BSD_FEATURES};
use crate::error::{Error, Result};
use crate::featureng::{fit_apply_scaler, prepare, FeatureSpec, Target};
use crate::numcore::{correlation, pca, Correlation, Matrix, PcaResult};
use crate::svg::{Plot, Series};

/// Five BSD quantities, used for the 4-vs-9 analysis.
pub fn pca_features_bsd() -> Vec<Feature> {
    BSD_FEATURES.to_vec()
}

/// BSD quantities plus rank and conductor, used for 1-vs-4 and top-|Sha| analyses.
pub fn pca_features_extended() -> Vec<Feature> {
    let mut f = BSD_FEATURES.to_vec();
    f.extend([Feature::Rank, Feature::Conductor]);
    f
}

pub const CORRELATION_FEATURES: [Feature; 3] = [Feature::RealPeriod, Feature::Rank, Feature::Torsion];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaAnalysis {
    pub feature_names: Vec<String>,
    pub result: PcaResult,
    /// `sha_order` of each projected row.
    pub row_sha: Vec<u64>,
    pub correlation_features: Vec<String>,
    /// Over raw (untransformed) values of [`CORRELATION_FEATURES`].
    pub correlation: Correlation,
}

/// Restrict to curves whose `sha_order` is among the `n` most frequent values
/// (ties broken by the smaller order).
pub fn top_sha_subset(ds: &Dataset, n: usize) -> Dataset {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for s in ds.records.iter().filter_map(|r| r.sha_order) {
        *counts.entry(s).or_default() += 1;
    }
    let mut by_freq: Vec<(u64, usize)> = counts.into_iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let keep: Vec<u64> = by_freq.iter().take(n).map(|p| p.0).collect();
    ds.filter(&format!("top_{n}_sha"), |r| r.sha_order.is_some_and(|s| keep.contains(&s)))
}

/// Log-transform (rank via ln(1 + r)), standardize, and project onto two components.
pub fn run_pca_analysis(ds: &Dataset, features: &[Feature]) -> Result<PcaAnalysis> {
    if features.len() < 2 {
        return Err(Error::Config("PCA needs at least two features".into()));
    }
    let spec = FeatureSpec::new(features.to_vec(), true, true);
    let m = prepare(ds, &spec, &Target::None)?;
    let (m, _, _) = fit_apply_scaler(&m, &m)?;
    let result = pca(&m.x, 2)?;
    let row_sha = ds
        .records
        .iter()
        .map(|r| {
            r.sha_order.ok_or_else(|| Error::MissingFeature {
                label: r.label.clone(),
                feature: "sha_order".into(),
            })
        })
        .collect::<Result<_>>()?;
    let raw: Vec<Vec<f64>> = CORRELATION_FEATURES
        .iter()
        .map(|&f| ds.records.iter().map(|r| r.feature_or_err(f)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    Ok(PcaAnalysis {
        feature_names: m.feature_names(),
        result,
        row_sha,
        correlation_features: CORRELATION_FEATURES.iter().map(|f| f.name()).collect(),
        correlation: correlation(&Matrix::from_columns(&raw)?)?,
    })
}

impl PcaAnalysis {
    pub fn write_loadings_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.result.write_loadings_csv(&self.feature_names, 2, f)
    }

    /// Rows `component, eigenvalue, explained_variance_ratio`.
    pub fn write_variance_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["component", "eigenvalue", "explained_variance_ratio"])?;
        for (i, (l, r)) in self.result.eigenvalues.iter().zip(&self.result.explained_variance_ratio).enumerate() {
            w.write_record([format!("PC{}", i + 1), l.to_string(), r.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_correlation_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec![String::new()];
        header.extend(self.correlation_features.iter().cloned());
        w.write_record(&header)?;
        for (i, name) in self.correlation_features.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(self.correlation.matrix.row(i).iter().map(|v| format!("{v:.6}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// PC1/PC2 scatter with one colour per `sha_order`.
    pub fn scatter(&self, title: &str) -> Plot {
        let mut groups: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
        let p = &self.result.projections;
        for (i, &s) in self.row_sha.iter().enumerate() {
            groups.entry(s).or_default().push((p[(i, 0)], p[(i, 1)]));
        }
        Plot::Scatter {
            title: title.to_string(),
            x_label: "PC1".into(),
            y_label: "PC2".into(),
            groups: groups
                .into_iter()
                .map(|(s, pts)| Series::new(format!("|Sha| = {s}"), pts))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvedata::{synthesize_dataset, ClassSpec};

    #[test]
    fn shapes() {
        let ds = synthesize_dataset(400, &ClassSpec::new(&[(4, 1), (9, 1)]), 3).unwrap();
        let a = run_pca_analysis(&ds, &pca_features_extended()).unwrap();
        assert_eq!(a.feature_names.len(), 7);
        assert_eq!(a.result.projections.cols(), 2);
        assert_eq!(a.correlation.matrix.rows(), 3);
        let sum: f64 = a.result.explained_variance_ratio.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        let mut buf = Vec::new();
        a.result.write_loadings_csv(&a.feature_names, 2, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 8);
    }

    #[test]
    fn top_subset_keeps_most_frequent() {
        let ds = synthesize_dataset(300, &ClassSpec::new(&[(1, 3), (4, 2), (9, 1)]), 5).unwrap();
        let t = top_sha_subset(&ds, 2);
        assert!(t.records.iter().all(|r| matches!(r.sha_order, Some(1 | 4))));
        assert_eq!(t.len(), 250);
    }
}
