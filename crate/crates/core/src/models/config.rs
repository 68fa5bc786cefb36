use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            learning_rate: 0.01,
            max_epochs: 2000,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![128, 64, 32],
            dropout: 0.3,
            learning_rate: 0.001,
            epochs: 100,
            batch_size: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbmConfig {
    pub max_bins: usize,
    pub n_trees: usize,
    pub shrinkage: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    /// Children lighter than this (sum of hessians) are not created.
    pub min_child_hessian: f64,
}

impl Default for GbmConfig {
    fn default() -> Self {
        GbmConfig {
            max_bins: 255,
            n_trees: 100,
            shrinkage: 0.1,
            max_leaves: 31,
            min_samples_leaf: 20,
            min_child_hessian: 1e-3,
        }
    }
}

/// Hyperparameters for every learner plus the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub logistic: LogisticConfig,
    pub mlp: MlpConfig,
    pub gbm: GbmConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 42,
            logistic: LogisticConfig::default(),
            mlp: MlpConfig::default(),
            gbm: GbmConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig {
            seed,
            ..Default::default()
        }
    }
}
