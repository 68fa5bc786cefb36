//! Learners implemented from scratch: logistic regression, an MLP and a
//! histogram gradient-boosting machine.

pub mod adam;
pub mod config;
pub mod gbm;
pub mod logistic;
pub mod mlp;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState};
pub use config::{GbmConfig, LogisticConfig, MlpConfig, TrainConfig};
pub use gbm::{gbm_fit, GbmModel, GbmTask, Loss};
pub use logistic::{logistic_fit, LogisticModel};
pub use mlp::{mlp_fit, mlp_gradcheck, GradcheckOptions, MlpFit, MlpModel};

use crate::error::{Error, Result};
use crate::featureng::{prepare, FeatureMatrix, FeatureSpec, Scaler, Target};
use crate::curvedata::Dataset;
use crate::numcore::Matrix;

/// Numerically stable logistic function, kept strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Targets as 0.0 / 1.0, rejecting non-binary or single-class input.
pub(crate) fn binary_targets(m: &FeatureMatrix) -> Result<Vec<f64>> {
    if m.n_rows() == 0 || !m.is_labeled() {
        return Err(Error::EmptyData);
    }
    if let Some(v) = m.y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Degenerate(format!("non-binary target value {v}")));
    }
    let pos = m.y.iter().filter(|&&v| v == 1.0).count();
    if pos == 0 || pos == m.n_rows() {
        return Err(Error::Degenerate("training target has a single class".into()));
    }
    Ok(m.y.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Mlp,
    Gbm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Logistic, ModelKind::Mlp, ModelKind::Gbm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Mlp => "mlp",
            ModelKind::Gbm => "gbm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(ModelKind::Logistic),
            "mlp" | "nn" => Ok(ModelKind::Mlp),
            "gbm" => Ok(ModelKind::Gbm),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Logistic(LogisticModel),
    Mlp(MlpModel),
    Gbm(GbmModel),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Logistic(_) => ModelKind::Logistic,
            ModelParams::Mlp(_) => ModelKind::Mlp,
            ModelParams::Gbm(_) => ModelKind::Gbm,
        }
    }

    /// Class index (as f64) for classifiers, raw value for regressors.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            ModelParams::Logistic(m) => Ok(m.predict(x)?.into_iter().map(|c| c as f64).collect()),
            ModelParams::Mlp(m) => Ok(m.predict(x)?.into_iter().map(|c| c as f64).collect()),
            ModelParams::Gbm(m) => m.predict(x),
        }
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A fitted model with everything needed to score a raw dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub feature_spec: FeatureSpec,
    pub target: Target,
    pub scaler: Option<Scaler>,
    pub config: TrainConfig,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn new(feature_spec: FeatureSpec, target: Target, scaler: Option<Scaler>, config: TrainConfig, params: ModelParams) -> Self {
        TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            feature_spec,
            target,
            scaler,
            config,
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model format version {} (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainedModel::from_json(&s)
    }

    /// Feature matrix for `ds` with this model's transforms and scaling.
    pub fn features_for(&self, ds: &Dataset) -> Result<FeatureMatrix> {
        let mut m = prepare(ds, &self.feature_spec, &Target::None)?;
        if let Some(s) = &self.scaler {
            m.x = s.apply(&m.x)?;
            m.scaler = Some(s.clone());
        }
        Ok(m)
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.params.predict(&self.features_for(ds)?.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_open_interval() {
        for z in [-1e6, -800.0, -40.0, 0.0, 40.0, 800.0, 1e6] {
            let p = sigmoid(z);
            assert!(p > 0.0 && p < 1.0, "{z} -> {p}");
        }
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn kind_parse() {
        assert_eq!("gbm".parse::<ModelKind>().unwrap(), ModelKind::Gbm);
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
