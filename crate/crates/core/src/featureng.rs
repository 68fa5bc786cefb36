//! Feature matrices built from datasets: column selection, log transforms,
//! z-score scaling and remove-one views.

use serde::{Deserialize, Serialize};

use crate::curvedata::{CurveRecord, Dataset, Feature, BSD_FEATURES};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Which columns to extract and how to transform them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub features: Vec<Feature>,
    /// One flag per entry of `features`.
    pub log_transform: Vec<bool>,
    pub standardize: bool,
    /// Append the 100 `a_p` columns after `features`.
    #[serde(default)]
    pub include_ap: bool,
    /// Whether appended `a_p` columns take part in scaling.
    #[serde(default = "default_true")]
    pub standardize_ap: bool,
}

fn default_true() -> bool {
    true
}

impl FeatureSpec {
    pub fn new(features: Vec<Feature>, log: bool, standardize: bool) -> Self {
        let log_transform = features.iter().map(|f| log && loggable(*f)).collect();
        FeatureSpec {
            features,
            log_transform,
            standardize,
            include_ap: false,
            standardize_ap: true,
        }
    }

    /// The five BSD features.
    pub fn bsd(log: bool, standardize: bool) -> Self {
        FeatureSpec::new(BSD_FEATURES.to_vec(), log, standardize)
    }

    pub fn with_ap(mut self) -> Self {
        self.include_ap = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.log_transform.len() {
            return Err(Error::Config(format!(
                "{} features but {} log flags",
                self.features.len(),
                self.log_transform.len()
            )));
        }
        for (i, f) in self.features.iter().enumerate() {
            if self.features[..i].contains(f) {
                return Err(Error::Config(format!("feature `{f}` listed twice")));
            }
            if self.log_transform[i] && !loggable(*f) {
                return Err(Error::Config(format!("feature `{f}` cannot be log-transformed")));
            }
            if self.include_ap && matches!(f, Feature::Ap(_)) {
                return Err(Error::Config(format!("`{f}` duplicates an include_ap column")));
            }
        }
        Ok(())
    }

    /// Output columns in order.
    pub fn columns(&self) -> Vec<Feature> {
        let mut cols = self.features.clone();
        if self.include_ap {
            cols.extend(Feature::all_ap());
        }
        cols
    }

    /// Spec with `feature` removed.
    pub fn without(&self, feature: Feature) -> Result<FeatureSpec> {
        let pos = self
            .features
            .iter()
            .position(|&f| f == feature)
            .ok_or_else(|| Error::UnknownFeature(feature.name()))?;
        let mut out = self.clone();
        out.features.remove(pos);
        out.log_transform.remove(pos);
        Ok(out)
    }
}

/// Strictly positive features take `ln`, rank takes `ln(1 + r)`.
pub fn loggable(f: Feature) -> bool {
    f.is_positive() || f == Feature::Rank
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// Index of `sha_order` in the given class list.
    ShaClass(Vec<u64>),
    /// `sqrt(sha_order)`.
    SqrtSha,
    /// 1 when `sha_order == 1`, else 0.
    TrivialSha,
    /// No target; `y` is left empty.
    None,
}

/// Column means and population standard deviations fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Columns passed through unscaled: zero variance or exempted by the spec.
    pub passthrough: Vec<bool>,
    /// Indices of zero-variance columns.
    pub constant: Vec<usize>,
}

impl Scaler {
    pub fn fit(x: &Matrix, exempt: &[bool]) -> Result<Scaler> {
        let (n, d) = (x.rows(), x.cols());
        if n == 0 {
            return Err(Error::EmptyData);
        }
        let mut mean = vec![0.0; d];
        for row in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for row in x.iter_rows() {
            for j in 0..d {
                let c = row[j] - mean[j];
                var[j] += c * c;
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n as f64).sqrt()).collect();
        let constant: Vec<usize> = (0..d).filter(|&j| !(std[j] > 0.0)).collect();
        let passthrough = (0..d)
            .map(|j| constant.contains(&j) || exempt.get(j).copied().unwrap_or(false))
            .collect();
        Ok(Scaler {
            mean,
            std,
            passthrough,
            constant,
        })
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for j in 0..row.len() {
            if !self.passthrough[j] {
                row[j] = (row[j] - self.mean[j]) / self.std[j];
            }
        }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: x.cols(),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            self.apply_row(out.row_mut(i));
        }
        Ok(out)
    }

    fn drop_column(&mut self, j: usize) {
        self.mean.remove(j);
        self.std.remove(j);
        self.passthrough.remove(j);
        self.constant.retain(|&c| c != j);
        self.constant.iter_mut().filter(|c| **c > j).for_each(|c| *c -= 1);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub x: Matrix,
    /// Class index or regression target; empty for [`Target::None`].
    pub y: Vec<f64>,
    pub features: Vec<Feature>,
    /// Per column: whether a log transform has been applied.
    pub logged: Vec<bool>,
    pub scaler: Option<Scaler>,
    pub row_labels: Vec<String>,
    /// Class list for classification targets.
    pub classes: Option<Vec<u64>>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name()).collect()
    }

    pub fn is_labeled(&self) -> bool {
        self.y.len() == self.x.rows()
    }

    /// Targets truncated to class indices; meaningless for a regression matrix.
    pub fn class_labels(&self) -> Vec<usize> {
        self.y.iter().map(|&v| v as usize).collect()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.as_ref().map_or(0, Vec::len)
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            x: self.x.select_rows(idx),
            y: if self.is_labeled() {
                idx.iter().map(|&i| self.y[i]).collect()
            } else {
                Vec::new()
            },
            row_labels: idx.iter().map(|&i| self.row_labels[i].clone()).collect(),
            ..self.clone()
        }
    }

    pub fn column_index(&self, f: Feature) -> Option<usize> {
        self.features.iter().position(|&c| c == f)
    }
}

fn target_value(rec: &CurveRecord, target: &Target) -> Result<Option<f64>> {
    let sha = || {
        rec.sha_order.ok_or_else(|| Error::MissingFeature {
            label: rec.label.clone(),
            feature: "sha_order".into(),
        })
    };
    match target {
        Target::None => Ok(None),
        Target::SqrtSha => Ok(Some((sha()? as f64).sqrt())),
        Target::TrivialSha => Ok(Some(f64::from(u8::from(sha()? == 1)))),
        Target::ShaClass(classes) => {
            let s = sha()?;
            let idx = classes.iter().position(|&c| c == s).ok_or_else(|| Error::UnknownClass {
                label: rec.label.clone(),
                sha: s,
            })?;
            Ok(Some(idx as f64))
        }
    }
}

/// Raw (untransformed) matrix with columns in spec order.
pub fn build_matrix(ds: &Dataset, spec: &FeatureSpec, target: &Target) -> Result<FeatureMatrix> {
    spec.validate()?;
    let cols = spec.columns();
    let mut data = Vec::with_capacity(ds.len() * cols.len());
    let mut y = Vec::with_capacity(ds.len());
    for rec in &ds.records {
        for &f in &cols {
            data.push(rec.feature_or_err(f)?);
        }
        if let Some(t) = target_value(rec, target)? {
            y.push(t);
        }
    }
    Ok(FeatureMatrix {
        x: Matrix::new(ds.len(), cols.len(), data)?,
        y,
        logged: vec![false; cols.len()],
        features: cols,
        scaler: None,
        row_labels: ds.records.iter().map(|r| r.label.clone()).collect(),
        classes: match target {
            Target::ShaClass(c) => Some(c.clone()),
            Target::TrivialSha => Some(vec![0, 1]),
            _ => None,
        },
    })
}

/// Apply `ln` (or `ln(1 + r)` for rank) to the columns the spec flags.
/// Columns already transformed are left alone; `a_p` columns never are.
pub fn log_transform(m: &FeatureMatrix, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    let mut out = m.clone();
    for (f, &flag) in spec.features.iter().zip(&spec.log_transform) {
        if !flag {
            continue;
        }
        let Some(j) = m.column_index(*f) else { continue };
        if out.logged[j] {
            continue;
        }
        for i in 0..out.x.rows() {
            let v = out.x[(i, j)];
            out.x[(i, j)] = if *f == Feature::Rank {
                if v < 0.0 {
                    return Err(Error::NonPositiveEntry { row: i, column: f.name(), value: v });
                }
                v.ln_1p()
            } else {
                if !(v > 0.0) {
                    return Err(Error::NonPositiveEntry { row: i, column: f.name(), value: v });
                }
                v.ln()
            };
        }
        out.logged[j] = true;
    }
    Ok(out)
}

/// `build_matrix` followed by `log_transform`.
pub fn prepare(ds: &Dataset, spec: &FeatureSpec, target: &Target) -> Result<FeatureMatrix> {
    log_transform(&build_matrix(ds, spec, target)?, spec)
}

/// Fit a scaler on `train` and apply it to both matrices.
pub fn fit_apply_scaler(train: &FeatureMatrix, test: &FeatureMatrix) -> Result<(FeatureMatrix, FeatureMatrix, Scaler)> {
    fit_apply_scaler_exempt(train, test, &vec![false; train.n_features()])
}

/// As [`fit_apply_scaler`], leaving `exempt` columns unscaled.
pub fn fit_apply_scaler_exempt(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    exempt: &[bool],
) -> Result<(FeatureMatrix, FeatureMatrix, Scaler)> {
    let scaler = Scaler::fit(&train.x, exempt)?;
    let mut tr = train.clone();
    tr.x = scaler.apply(&train.x)?;
    tr.scaler = Some(scaler.clone());
    let mut te = test.clone();
    te.x = scaler.apply(&test.x)?;
    te.scaler = Some(scaler.clone());
    Ok((tr, te, scaler))
}

/// Scale according to `spec.standardize` / `spec.standardize_ap`.
pub fn scale_for_spec(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    spec: &FeatureSpec,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    if !spec.standardize {
        return Ok((train.clone(), test.clone()));
    }
    let exempt: Vec<bool> = train
        .features
        .iter()
        .map(|f| matches!(f, Feature::Ap(_)) && !spec.standardize_ap)
        .collect();
    let (tr, te, _) = fit_apply_scaler_exempt(train, test, &exempt)?;
    Ok((tr, te))
}

pub fn drop_feature(m: &FeatureMatrix, name: &str) -> Result<FeatureMatrix> {
    let j = m
        .features
        .iter()
        .position(|f| f.name() == name || name.parse::<Feature>().is_ok_and(|p| p == *f))
        .ok_or_else(|| Error::UnknownFeature(name.to_string()))?;
    let keep: Vec<usize> = (0..m.n_features()).filter(|&c| c != j).collect();
    let mut out = m.clone();
    out.x = m.x.select_columns(&keep);
    out.features.remove(j);
    out.logged.remove(j);
    if let Some(s) = out.scaler.as_mut() {
        s.drop_column(j);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvedata::{synthesize_dataset, ClassSpec, Source};

    fn ds() -> Dataset {
        let recs = vec![
            CurveRecord::bsd("a", 11, 0, 1, 2.0, 1.0, 1, 2.0, Some(1)),
            CurveRecord::bsd("b", 14, 1, 2, 1.0, 3.0, 2, 6.0, Some(4)),
            CurveRecord::bsd("c", 15, 3, 1, 0.5, 2.0, 4, 36.0, Some(9)),
        ];
        Dataset::new(recs, Source::Memory).unwrap()
    }

    #[test]
    fn raw_bsd_matrix() {
        let m = build_matrix(&ds(), &FeatureSpec::bsd(false, false), &Target::SqrtSha).unwrap();
        assert_eq!(m.n_features(), 5);
        assert_eq!(m.x.row(1), &[6.0, 2.0, 1.0, 3.0, 2.0]);
        assert_eq!(m.y, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn class_target_and_unknown_class() {
        let m = build_matrix(&ds(), &FeatureSpec::bsd(false, false), &Target::ShaClass(vec![1, 4, 9])).unwrap();
        assert_eq!(m.y, vec![0.0, 1.0, 2.0]);
        let e = build_matrix(&ds(), &FeatureSpec::bsd(false, false), &Target::ShaClass(vec![1, 4]));
        assert!(matches!(e, Err(Error::UnknownClass { sha: 9, .. })));
    }

    #[test]
    fn missing_feature_reports_label() {
        let mut d = ds();
        d.records[2].regulator = None;
        match build_matrix(&d, &FeatureSpec::bsd(false, false), &Target::None) {
            Err(Error::MissingFeature { label, .. }) => assert_eq!(label, "c"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_ap_reports_label() {
        let spec = FeatureSpec::bsd(false, false).with_ap();
        assert!(matches!(
            build_matrix(&ds(), &spec, &Target::None),
            Err(Error::MissingFeature { .. })
        ));
    }

    #[test]
    fn rank_log1p() {
        let spec = FeatureSpec::new(vec![Feature::Rank], true, false);
        let m = prepare(&ds(), &spec, &Target::None).unwrap();
        assert_eq!(m.x.column(0), vec![0.0, 2f64.ln(), 4f64.ln()]);
    }

    #[test]
    fn ones_log_to_zero() {
        let spec = FeatureSpec::new(vec![Feature::Regulator], true, false);
        let mut d = ds();
        d.records.iter_mut().for_each(|r| r.regulator = Some(1.0));
        assert_eq!(prepare(&d, &spec, &Target::None).unwrap().x.column(0), vec![0.0; 3]);
    }

    #[test]
    fn rejects_logging_ap() {
        let spec = FeatureSpec {
            features: vec![Feature::Ap(0)],
            log_transform: vec![true],
            standardize: false,
            include_ap: false,
            standardize_ap: true,
        };
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn non_positive_entry() {
        let spec = FeatureSpec::new(vec![Feature::Regulator], true, false);
        let mut m = build_matrix(&ds(), &spec, &Target::None).unwrap();
        m.x[(1, 0)] = 0.0;
        assert!(matches!(
            log_transform(&m, &spec),
            Err(Error::NonPositiveEntry { row: 1, .. })
        ));
    }

    #[test]
    fn log_identity_on_synthetic() {
        let d = synthesize_dataset(200, &ClassSpec::new(&[(1, 1), (4, 1), (9, 1), (16, 1)]), 3).unwrap();
        let m = prepare(&d, &FeatureSpec::bsd(true, false), &Target::SqrtSha).unwrap();
        for (row, y) in m.x.iter_rows().zip(&m.y) {
            let rhs = row[0] + 2.0 * row[1] - row[2] - row[3] - row[4];
            assert!((2.0 * y.ln() - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn scaler_two_points() {
        let spec = FeatureSpec::new(vec![Feature::Tamagawa, Feature::Torsion], false, true);
        let mut d = ds();
        d.records.truncate(2);
        d.records[1].tamagawa_product = Some(3);
        d.records[1].torsion_order = Some(1);
        let m = build_matrix(&d, &spec, &Target::None).unwrap();
        let (tr, _, s) = fit_apply_scaler(&m, &m).unwrap();
        assert_eq!(tr.x.column(0), vec![-1.0, 1.0]);
        assert_eq!(tr.x.column(1), vec![1.0, 1.0]);
        assert_eq!(s.constant, vec![1]);
    }

    #[test]
    fn test_uses_train_statistics() {
        let spec = FeatureSpec::new(vec![Feature::Tamagawa], false, true);
        let train = build_matrix(&ds(), &spec, &Target::None).unwrap();
        let mut test = train.select_rows(&[0]);
        test.x[(0, 0)] = 100.0;
        let (_, te, s) = fit_apply_scaler(&train, &test).unwrap();
        assert_eq!(te.x[(0, 0)], (100.0 - s.mean[0]) / s.std[0]);
        assert!((s.mean[0] - 7.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn drop_twice() {
        let m = build_matrix(&ds(), &FeatureSpec::bsd(false, false), &Target::None).unwrap();
        let d1 = drop_feature(&m, "regulator").unwrap();
        assert_eq!(d1.n_features(), 4);
        assert!(!d1.feature_names().contains(&"regulator".to_string()));
        assert!(matches!(drop_feature(&d1, "regulator"), Err(Error::UnknownFeature(_))));
    }

    #[test]
    fn ablation_grid_distinct() {
        let m = build_matrix(&ds(), &FeatureSpec::bsd(false, false), &Target::None).unwrap();
        let views: Vec<_> = BSD_FEATURES.iter().map(|f| drop_feature(&m, &f.name()).unwrap()).collect();
        for i in 0..5 {
            assert_eq!(views[i].n_features(), 4);
            for j in 0..i {
                assert_ne!(views[i].features, views[j].features);
            }
        }
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = FeatureSpec::bsd(true, true).with_ap();
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"special_value\""));
        assert_eq!(serde_json::from_str::<FeatureSpec>(&s).unwrap(), spec);
    }
}
