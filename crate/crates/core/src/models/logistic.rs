//! Binary logistic regression trained by full-batch Adam.

use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::config::{LogisticConfig, TrainConfig};
use super::{binary_targets, sigmoid};
use crate::error::{Error, Result};
use crate::featureng::FeatureMatrix;
use crate::numcore::{dot, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: LogisticConfig,
    pub epochs_run: usize,
    pub final_grad_norm: f64,
}

impl LogisticModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_dim(self.weights.len(), x)?;
        Ok(x.iter_rows().map(|r| sigmoid(self.decision(r))).collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        check_dim(self.weights.len(), x)?;
        Ok(x.iter_rows().map(|r| usize::from(self.decision(r) > 0.0)).collect())
    }
}

fn check_dim(d: usize, x: &Matrix) -> Result<()> {
    if x.cols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.cols() });
    }
    Ok(())
}

pub fn logistic_fit(m: &FeatureMatrix, cfg: &TrainConfig) -> Result<LogisticModel> {
    let y = binary_targets(m)?;
    let lc = cfg.logistic.clone();
    let (n, d) = (m.n_rows(), m.n_features());
    // Parameters: weights followed by the bias.
    let mut params = vec![0.0; d + 1];
    let mut state = AdamState::new(d + 1);
    let mut grad = vec![0.0; d + 1];
    let mut epochs_run = 0;
    let mut gnorm = f64::INFINITY;
    for _ in 0..lc.max_epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (row, &t) in m.x.iter_rows().zip(&y) {
            let z = dot(&params[..d], row) + params[d];
            let r = sigmoid(z) - t;
            for (g, v) in grad[..d].iter_mut().zip(row) {
                *g += r * v;
            }
            grad[d] += r;
        }
        grad.iter_mut().for_each(|g| *g /= n as f64);
        gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < lc.tolerance {
            break;
        }
        adam_step(&mut params, &grad, &mut state, lc.learning_rate);
        epochs_run += 1;
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite(format!("logistic weights after {epochs_run} epochs")));
    }
    Ok(LogisticModel {
        bias: params[d],
        weights: params[..d].to_vec(),
        config: lc,
        epochs_run,
        final_grad_norm: gnorm,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::curvedata::Feature;

    pub(crate) fn matrix(rows: Vec<Vec<f64>>, y: Vec<f64>) -> FeatureMatrix {
        let d = rows[0].len();
        FeatureMatrix {
            x: Matrix::from_rows(&rows).unwrap(),
            row_labels: (0..y.len()).map(|i| i.to_string()).collect(),
            y,
            features: (0..d).map(Feature::Ap).collect(),
            logged: vec![false; d],
            scaler: None,
            classes: Some(vec![0, 1]),
        }
    }

    #[test]
    fn separable_1d() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..50 {
            rows.push(vec![-1.0]);
            y.push(0.0);
            rows.push(vec![1.0]);
            y.push(1.0);
        }
        let m = matrix(rows, y.clone());
        let model = logistic_fit(&m, &TrainConfig::default()).unwrap();
        let pred = model.predict(&m.x).unwrap();
        assert!(pred.iter().zip(&y).all(|(&p, &t)| p as f64 == t));
        assert!(model.predict_proba(&m.x).unwrap().iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn single_class_degenerate() {
        let m = matrix(vec![vec![1.0], vec![2.0]], vec![1.0, 1.0]);
        assert!(matches!(logistic_fit(&m, &TrainConfig::default()), Err(Error::Degenerate(_))));
    }
}
