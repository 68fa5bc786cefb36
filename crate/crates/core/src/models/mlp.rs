//! Feed-forward ReLU network with a two-logit softmax head.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::binary_targets;
use super::config::{MlpConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::featureng::FeatureMatrix;
use crate::numcore::Matrix;
use crate::rng;

const N_OUT: usize = 2;
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_DROPOUT: u64 = 2;
const STREAM_GRADCHECK: u64 = 3;

/// Weights are stored flat, layer by layer: an `out x in` row-major block
/// followed by `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub dropout: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpFit {
    /// Weights from the epoch with the highest test accuracy.
    pub model: MlpModel,
    pub best_test_accuracy: f64,
    /// 1-based.
    pub best_epoch: usize,
    pub final_test_accuracy: f64,
    pub history: Vec<EpochStats>,
}

struct Layer {
    fan_in: usize,
    fan_out: usize,
    w: usize,
    b: usize,
}

impl MlpModel {
    pub fn new(d: usize, hidden: &[usize], dropout: f64, seed: u64) -> Self {
        let mut layer_sizes = vec![d];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(N_OUT);
        let mut model = MlpModel {
            params: Vec::new(),
            layer_sizes,
            dropout,
            seed,
        };
        let mut r = rng::stream(seed, &[STREAM_INIT]);
        let layers = model.layers();
        model.params = vec![0.0; model.n_params()];
        for l in &layers {
            let bound = 1.0 / (l.fan_in as f64).sqrt();
            for p in &mut model.params[l.w..l.b + l.fan_out] {
                *p = r.gen_range(-bound..bound);
            }
        }
        model
    }

    fn layers(&self) -> Vec<Layer> {
        let mut off = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let l = Layer {
                    fan_in: w[0],
                    fan_out: w[1],
                    w: off,
                    b: off + w[0] * w[1],
                };
                off = l.b + w[1];
                l
            })
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Eval-mode logits for every row of `x`, row-major `n x 2`.
    pub fn logits(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        let acts = forward(self, &self.params, x.data(), x.rows(), None);
        Ok(acts.into_iter().last().unwrap())
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self
            .logits(x)?
            .chunks(N_OUT)
            .map(|z| {
                let m = z[0].max(z[1]);
                let (a, b) = ((z[0] - m).exp(), (z[1] - m).exp());
                b / (a + b)
            })
            .collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self.logits(x)?.chunks(N_OUT).map(|z| usize::from(z[1] > z[0])).collect())
    }
}

/// Forward pass. Returns the activations of every layer, input first.
/// `masks` holds inverted-dropout multipliers for each hidden layer.
fn forward(model: &MlpModel, params: &[f64], x: &[f64], n: usize, masks: Option<&[Vec<f64>]>) -> Vec<Vec<f64>> {
    let layers = model.layers();
    let mut acts = vec![x.to_vec()];
    for (li, l) in layers.iter().enumerate() {
        let a = acts.last().unwrap();
        let mut z = vec![0.0; n * l.fan_out];
        let w = &params[l.w..l.b];
        let b = &params[l.b..l.b + l.fan_out];
        for i in 0..n {
            let ai = &a[i * l.fan_in..(i + 1) * l.fan_in];
            for o in 0..l.fan_out {
                let wo = &w[o * l.fan_in..(o + 1) * l.fan_in];
                z[i * l.fan_out + o] = b[o] + ai.iter().zip(wo).map(|(p, q)| p * q).sum::<f64>();
            }
        }
        if li + 1 < layers.len() {
            z.iter_mut().for_each(|v| *v = v.max(0.0));
            if let Some(ms) = masks {
                z.iter_mut().zip(&ms[li]).for_each(|(v, k)| *v *= k);
            }
        }
        acts.push(z);
    }
    acts
}

/// Mean softmax cross-entropy and its gradient with respect to `params`.
fn loss_and_grad(
    model: &MlpModel,
    params: &[f64],
    x: &[f64],
    y: &[usize],
    masks: Option<&[Vec<f64>]>,
) -> (f64, Vec<f64>) {
    let n = y.len();
    let layers = model.layers();
    let acts = forward(model, params, x, n, masks);
    let logits = acts.last().unwrap();
    let mut loss = 0.0;
    let mut delta = vec![0.0; n * N_OUT];
    for i in 0..n {
        let z = &logits[i * N_OUT..(i + 1) * N_OUT];
        let m = z[0].max(z[1]);
        let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
        loss += lse - z[y[i]];
        for k in 0..N_OUT {
            let p = (z[k] - lse).exp();
            delta[i * N_OUT + k] = (p - f64::from(u8::from(k == y[i]))) / n as f64;
        }
    }
    loss /= n as f64;

    let mut grad = vec![0.0; params.len()];
    for (li, l) in layers.iter().enumerate().rev() {
        let a = &acts[li];
        let (gw, rest) = grad[l.w..].split_at_mut(l.fan_in * l.fan_out);
        let gb = &mut rest[..l.fan_out];
        for i in 0..n {
            let ai = &a[i * l.fan_in..(i + 1) * l.fan_in];
            for o in 0..l.fan_out {
                let d = delta[i * l.fan_out + o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                for (g, v) in gw[o * l.fan_in..(o + 1) * l.fan_in].iter_mut().zip(ai) {
                    *g += d * v;
                }
            }
        }
        if li == 0 {
            break;
        }
        let w = &params[l.w..l.b];
        let mut prev = vec![0.0; n * l.fan_in];
        for i in 0..n {
            let pi = &mut prev[i * l.fan_in..(i + 1) * l.fan_in];
            for o in 0..l.fan_out {
                let d = delta[i * l.fan_out + o];
                if d == 0.0 {
                    continue;
                }
                for (p, q) in pi.iter_mut().zip(&w[o * l.fan_in..(o + 1) * l.fan_in]) {
                    *p += d * q;
                }
            }
        }
        // Through dropout and ReLU of the previous hidden layer. `a` is the
        // post-dropout activation, so a zero there blocks the gradient.
        for (k, p) in prev.iter_mut().enumerate() {
            if a[k] <= 0.0 {
                *p = 0.0;
            } else if let Some(ms) = masks {
                *p *= ms[li - 1][k];
            }
        }
        delta = prev;
    }
    (loss, grad)
}

fn dropout_masks(model: &MlpModel, n: usize, epoch: usize, batch: usize) -> Vec<Vec<f64>> {
    let mut r = rng::stream(model.seed, &[STREAM_DROPOUT, epoch as u64, batch as u64]);
    let keep = 1.0 - model.dropout;
    let hidden = &model.layer_sizes[1..model.layer_sizes.len() - 1];
    hidden
        .iter()
        .map(|&h| {
            (0..n * h)
                .map(|_| if r.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect()
        })
        .collect()
}

fn eval_accuracy(model: &MlpModel, m: &FeatureMatrix, y: &[usize]) -> Result<f64> {
    let pred = model.predict(&m.x)?;
    Ok(pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64)
}

/// Minibatch Adam for `cfg.mlp.epochs` epochs, tracking test accuracy.
pub fn mlp_fit(train: &FeatureMatrix, test: &FeatureMatrix, cfg: &TrainConfig) -> Result<MlpFit> {
    let mc: &MlpConfig = &cfg.mlp;
    if mc.epochs == 0 || mc.batch_size == 0 {
        return Err(Error::DegenerateConfig("epochs and batch_size must be positive".into()));
    }
    if !(0.0..1.0).contains(&mc.dropout) {
        return Err(Error::DegenerateConfig(format!("dropout {} outside [0, 1)", mc.dropout)));
    }
    let ytr: Vec<usize> = binary_targets(train)?.iter().map(|&v| v as usize).collect();
    let yte: Vec<usize> = test.y.iter().map(|&v| v as usize).collect();
    if test.n_rows() == 0 || yte.len() != test.n_rows() {
        return Err(Error::EmptyData);
    }
    let d = train.n_features();
    let mut model = MlpModel::new(d, &mc.hidden, mc.dropout, cfg.seed);
    let mut state = AdamState::new(model.n_params());
    let mut order: Vec<usize> = (0..train.n_rows()).collect();
    let mut shuffle_rng = rng::stream(cfg.seed, &[STREAM_SHUFFLE]);
    let mut history = Vec::with_capacity(mc.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut xb = Vec::with_capacity(mc.batch_size * d);
    let mut yb = Vec::with_capacity(mc.batch_size);

    for epoch in 0..mc.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for (bi, chunk) in order.chunks(mc.batch_size).enumerate() {
            xb.clear();
            yb.clear();
            for &i in chunk {
                xb.extend_from_slice(train.x.row(i));
                yb.push(ytr[i]);
            }
            let masks = (mc.dropout > 0.0).then(|| dropout_masks(&model, chunk.len(), epoch, bi));
            let (loss, grad) = loss_and_grad(&model, &model.params, &xb, &yb, masks.as_deref());
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss diverged at epoch {}", epoch + 1)));
            }
            total += loss * chunk.len() as f64;
            adam_step(&mut model.params, &grad, &mut state, mc.learning_rate);
        }
        let acc = eval_accuracy(&model, test, &yte)?;
        history.push(EpochStats {
            epoch: epoch + 1,
            train_loss: total / train.n_rows() as f64,
            test_accuracy: acc,
        });
        if best.as_ref().is_none_or(|b| acc > b.0) {
            best = Some((acc, epoch + 1, model.params.clone()));
        }
    }
    let (best_acc, best_epoch, best_params) = best.unwrap();
    let final_test_accuracy = history.last().unwrap().test_accuracy;
    model.params = best_params;
    Ok(MlpFit {
        model,
        best_test_accuracy: best_acc,
        best_epoch,
        final_test_accuracy,
        history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckOptions {
    pub n_params: usize,
    pub h: f64,
    pub seed: u64,
    /// Test hook: scale the analytic gradient before comparing.
    pub corrupt_scale: Option<f64>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions {
            n_params: 200,
            h: 1e-5,
            seed: 0,
            corrupt_scale: None,
        }
    }
}

/// Largest relative error between backprop and central differences over a
/// seeded random subset of parameters. Dropout is disabled.
pub fn mlp_gradcheck(model: &MlpModel, batch: &FeatureMatrix, opts: &GradcheckOptions) -> Result<f64> {
    if batch.x.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            got: batch.x.cols(),
        });
    }
    let y: Vec<usize> = batch.y.iter().map(|&v| v as usize).collect();
    let x = batch.x.data();
    let (_, mut grad) = loss_and_grad(model, &model.params, x, &y, None);
    if let Some(s) = opts.corrupt_scale {
        grad.iter_mut().for_each(|g| *g *= s);
    }
    let mut idx: Vec<usize> = (0..model.n_params()).collect();
    idx.shuffle(&mut rng::stream(opts.seed, &[STREAM_GRADCHECK]));
    idx.truncate(opts.n_params);
    let mut p = model.params.clone();
    let mut worst: f64 = 0.0;
    for &i in &idx {
        let orig = p[i];
        p[i] = orig + opts.h;
        let (lp, _) = loss_and_grad(model, &p, x, &y, None);
        p[i] = orig - opts.h;
        let (lm, _) = loss_and_grad(model, &p, x, &y, None);
        p[i] = orig;
        let numeric = (lp - lm) / (2.0 * opts.h);
        let denom = grad[i].abs().max(numeric.abs()).max(1e-7);
        worst = worst.max((grad[i] - numeric).abs() / denom);
    }
    Ok(worst)
}
