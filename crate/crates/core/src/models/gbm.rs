//! Histogram gradient boosting with leaf-wise trees.
//!
//! Bin edges are training values picked by rank, and a sample goes left when
//! its value is at most the split edge. Both steps depend only on the order of
//! values within a column, so refitting after a strictly increasing transform
//! of any feature reproduces the same trees and predictions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{GbmConfig, TrainConfig};
use super::{binary_targets, sigmoid};
use crate::error::{Error, Result};
use crate::featureng::FeatureMatrix;
use crate::numcore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GbmTask {
    Classify,
    Regress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Logistic,
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        /// Rows with bin index `<= bin` go left.
        bin: u16,
        /// Edge value of `bin`; `x <= threshold` is equivalent to the bin test.
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub trees: Vec<Tree>,
    /// Per feature, sorted distinct training values used as bin upper bounds.
    pub bin_edges: Vec<Vec<f64>>,
    pub shrinkage: f64,
    pub loss: Loss,
    pub base_score: f64,
    pub config: GbmConfig,
    /// Set when the target was constant and no trees were grown.
    pub degenerate: bool,
    /// Mean training loss before the first tree and after each tree.
    pub train_loss: Vec<f64>,
}

impl GbmModel {
    pub fn n_features(&self) -> usize {
        self.bin_edges.len()
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.cols(),
            });
        }
        Ok(())
    }

    /// Raw additive score (log-odds for classification).
    pub fn raw_score_row(&self, row: &[f64]) -> f64 {
        // Same accumulation order as training, so scores match bitwise.
        self.trees
            .iter()
            .fold(self.base_score, |acc, t| acc + self.shrinkage * t.predict_row(row))
    }

    /// Regression output, or log-odds for classification.
    pub fn predict_raw(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(x.iter_rows().map(|r| self.raw_score_row(r)).collect())
    }

    /// Regression values, or class indices for classification.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let raw = self.predict_raw(x)?;
        Ok(match self.loss {
            Loss::Squared => raw,
            Loss::Logistic => raw.into_iter().map(|s| f64::from(u8::from(s > 0.0))).collect(),
        })
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if self.loss != Loss::Logistic {
            return Err(Error::Config("predict_proba requires a classification model".into()));
        }
        Ok(self.predict_raw(x)?.into_iter().map(sigmoid).collect())
    }

    /// Total split gain per feature index, sorted descending (ties by index).
    pub fn feature_importance(&self) -> Vec<(usize, f64)> {
        let mut gain = vec![0.0; self.n_features()];
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Split { feature, gain: g, .. } = n {
                    gain[*feature] += g;
                }
            }
        }
        let mut out: Vec<(usize, f64)> = gain.into_iter().enumerate().collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }
}

/// Rank-based bin edges for one column.
pub fn fit_bin_edges(column: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        distinct.pop();
        return distinct;
    }
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..max_bins).map(|k| sorted[(k * n / max_bins).max(1) - 1]).collect();
    edges.dedup();
    if edges.last() == sorted.last() {
        edges.pop();
    }
    edges
}

pub fn bin_index(edges: &[f64], v: f64) -> u16 {
    edges.partition_point(|&e| e < v) as u16
}

#[derive(Clone, Copy, Default)]
struct Bucket {
    g: f64,
    h: f64,
    n: usize,
}

struct Candidate {
    gain: f64,
    feature: usize,
    bin: u16,
}

struct OpenLeaf {
    node: usize,
    rows: Vec<usize>,
    g: f64,
    h: f64,
    best: Option<Candidate>,
}

fn score(g: f64, h: f64) -> f64 {
    g * g / h
}

fn best_split(
    rows: &[usize],
    bins: &[Vec<u16>],
    n_bins: &[usize],
    grad: &[f64],
    hess: &[f64],
    cfg: &GbmConfig,
) -> Option<Candidate> {
    let (gt, ht): (f64, f64) = rows.iter().fold((0.0, 0.0), |(g, h), &i| (g + grad[i], h + hess[i]));
    let parent = score(gt, ht);
    let per_feature: Vec<Option<Candidate>> = (0..bins.len())
        .into_par_iter()
        .map(|f| {
            let nb = n_bins[f];
            if nb < 2 {
                return None;
            }
            let mut hist = vec![Bucket::default(); nb];
            let col = &bins[f];
            for &i in rows {
                let b = &mut hist[col[i] as usize];
                b.g += grad[i];
                b.h += hess[i];
                b.n += 1;
            }
            let mut left = Bucket::default();
            let mut best: Option<Candidate> = None;
            for (b, bucket) in hist.iter().enumerate().take(nb - 1) {
                left.g += bucket.g;
                left.h += bucket.h;
                left.n += bucket.n;
                let rn = rows.len() - left.n;
                if left.n < cfg.min_samples_leaf || rn < cfg.min_samples_leaf {
                    continue;
                }
                let (rg, rh) = (gt - left.g, ht - left.h);
                if left.h < cfg.min_child_hessian || rh < cfg.min_child_hessian {
                    continue;
                }
                let gain = 0.5 * (score(left.g, left.h) + score(rg, rh) - parent);
                if gain > best.as_ref().map_or(0.0, |c| c.gain) {
                    best = Some(Candidate {
                        gain,
                        feature: f,
                        bin: b as u16,
                    });
                }
            }
            best
        })
        .collect();
    per_feature
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<Candidate>, c| match acc {
            Some(a) if a.gain >= c.gain => Some(a),
            _ => Some(c),
        })
}

fn open_leaf(
    node: usize,
    rows: Vec<usize>,
    bins: &[Vec<u16>],
    n_bins: &[usize],
    grad: &[f64],
    hess: &[f64],
    cfg: &GbmConfig,
) -> OpenLeaf {
    let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &i| (g + grad[i], h + hess[i]));
    let best = if rows.len() >= 2 * cfg.min_samples_leaf {
        best_split(&rows, bins, n_bins, grad, hess, cfg)
    } else {
        None
    };
    OpenLeaf { node, rows, g, h, best }
}

fn grow_tree(
    bins: &[Vec<u16>],
    n_bins: &[usize],
    edges: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    cfg: &GbmConfig,
) -> (Tree, Vec<(Vec<usize>, f64)>) {
    let n = grad.len();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut open = vec![open_leaf(0, (0..n).collect(), bins, n_bins, grad, hess, cfg)];
    let mut closed: Vec<OpenLeaf> = Vec::new();
    let mut n_leaves = 1;
    while n_leaves < cfg.max_leaves {
        // Highest gain first; ties go to the earliest-created leaf.
        let Some(pick) = open
            .iter()
            .enumerate()
            .filter_map(|(k, l)| l.best.as_ref().map(|c| (k, c.gain)))
            .fold(None, |acc: Option<(usize, f64)>, (k, g)| match acc {
                Some((_, bg)) if bg >= g => acc,
                _ => Some((k, g)),
            })
            .map(|(k, _)| k)
        else {
            break;
        };
        let leaf = open.remove(pick);
        let c = leaf.best.as_ref().unwrap();
        let col = &bins[c.feature];
        let (lrows, rrows): (Vec<usize>, Vec<usize>) = leaf.rows.iter().partition(|&&i| col[i] <= c.bin);
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[leaf.node] = Node::Split {
            feature: c.feature,
            bin: c.bin,
            threshold: edges[c.feature][c.bin as usize],
            gain: c.gain,
            left: li,
            right: ri,
        };
        open.push(open_leaf(li, lrows, bins, n_bins, grad, hess, cfg));
        open.push(open_leaf(ri, rrows, bins, n_bins, grad, hess, cfg));
        n_leaves += 1;
    }
    closed.extend(open);
    let mut leaves = Vec::with_capacity(closed.len());
    for l in closed {
        let value = if l.h > 0.0 { -l.g / l.h } else { 0.0 };
        nodes[l.node] = Node::Leaf { value };
        leaves.push((l.rows, value));
    }
    (Tree { nodes }, leaves)
}

fn mean_loss(loss: Loss, raw: &[f64], y: &[f64]) -> f64 {
    let s: f64 = match loss {
        Loss::Squared => raw.iter().zip(y).map(|(f, t)| 0.5 * (f - t) * (f - t)).sum(),
        // log(1 + e^f) - y f, computed stably.
        Loss::Logistic => raw
            .iter()
            .zip(y)
            .map(|(&f, &t)| f.max(0.0) + (-f.abs()).exp().ln_1p() - t * f)
            .sum(),
    };
    s / raw.len() as f64
}

pub fn gbm_fit(m: &FeatureMatrix, cfg: &TrainConfig, task: GbmTask) -> Result<GbmModel> {
    let gc = cfg.gbm.clone();
    let (n, d) = (m.n_rows(), m.n_features());
    if n < 2 {
        return Err(Error::EmptyData);
    }
    if gc.max_bins < 2 || gc.max_bins > 256 || gc.max_leaves < 2 {
        return Err(Error::DegenerateConfig("max_bins must be in 2..=256 and max_leaves >= 2".into()));
    }
    let (y, loss) = match task {
        GbmTask::Classify => (binary_targets(m)?, Loss::Logistic),
        GbmTask::Regress => {
            if m.y.len() != n {
                return Err(Error::EmptyData);
            }
            (m.y.clone(), Loss::Squared)
        }
    };
    let cols: Vec<Vec<f64>> = (0..d).map(|j| m.x.column(j)).collect();
    let edges: Vec<Vec<f64>> = cols.par_iter().map(|c| fit_bin_edges(c, gc.max_bins)).collect();
    let bins: Vec<Vec<u16>> = cols
        .par_iter()
        .zip(&edges)
        .map(|(c, e)| c.iter().map(|&v| bin_index(e, v)).collect())
        .collect();
    let n_bins: Vec<usize> = edges.iter().map(|e| e.len() + 1).collect();

    let mean_y = y.iter().sum::<f64>() / n as f64;
    let base_score = match loss {
        Loss::Squared => mean_y,
        Loss::Logistic => (mean_y / (1.0 - mean_y)).ln(),
    };
    let mut model = GbmModel {
        trees: Vec::new(),
        bin_edges: edges.clone(),
        shrinkage: gc.shrinkage,
        loss,
        base_score,
        config: gc.clone(),
        degenerate: false,
        train_loss: Vec::new(),
    };
    if loss == Loss::Squared && y.iter().all(|&v| v == y[0]) {
        log::warn!("constant regression target; returning a base-score model");
        model.degenerate = true;
        return Ok(model);
    }

    let mut raw = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    model.train_loss.push(mean_loss(loss, &raw, &y));
    for _ in 0..gc.n_trees {
        for i in 0..n {
            match loss {
                Loss::Squared => {
                    grad[i] = raw[i] - y[i];
                    hess[i] = 1.0;
                }
                Loss::Logistic => {
                    let p = sigmoid(raw[i]);
                    grad[i] = p - y[i];
                    hess[i] = p * (1.0 - p);
                }
            }
        }
        let (tree, leaves) = grow_tree(&bins, &n_bins, &edges, &grad, &hess, &gc);
        for (rows, value) in leaves {
            for i in rows {
                raw[i] += gc.shrinkage * value;
            }
        }
        model.trees.push(tree);
        model.train_loss.push(mean_loss(loss, &raw, &y));
    }
    if model.trees.iter().flat_map(|t| &t.nodes).any(|n| matches!(n, Node::Leaf { value } if !value.is_finite())) {
        return Err(Error::NonFinite("gbm leaf value".into()));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::logistic::tests::matrix;
    use rand::Rng as _;

    fn step_data() -> FeatureMatrix {
        let mut r = crate::rng::seeded(4);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]).collect();
        let y = rows.iter().map(|v| f64::from(u8::from(v[0] > 0.0))).collect();
        matrix(rows, y)
    }

    #[test]
    fn single_split_one_tree() {
        let m = step_data();
        let mut cfg = TrainConfig::default();
        cfg.gbm.n_trees = 1;
        let model = gbm_fit(&m, &cfg, GbmTask::Classify).unwrap();
        assert_eq!(model.predict(&m.x).unwrap(), m.y);
        let imp = model.feature_importance();
        assert_eq!(imp[0].0, 0);
        assert_eq!(imp[1].1, 0.0);
    }

    #[test]
    fn constant_regression_target() {
        let mut m = step_data();
        m.y = vec![2.5; m.n_rows()];
        let model = gbm_fit(&m, &TrainConfig::default(), GbmTask::Regress).unwrap();
        assert!(model.degenerate);
        assert!(model.trees.is_empty());
        assert!(model.predict(&m.x).unwrap().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn bin_edges_small_and_large() {
        assert_eq!(fit_bin_edges(&[3.0, 1.0, 2.0, 1.0], 255), vec![1.0, 2.0]);
        let col: Vec<f64> = (0..10_000).map(f64::from).collect();
        let e = fit_bin_edges(&col, 255);
        assert!(e.len() <= 254);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(bin_index(&e, -1.0), 0);
        assert_eq!(bin_index(&e, 1e9) as usize, e.len());
    }

    #[test]
    fn loss_non_increasing() {
        let m = step_data();
        let mut cfg = TrainConfig::default();
        cfg.gbm.n_trees = 30;
        let model = gbm_fit(&m, &cfg, GbmTask::Classify).unwrap();
        assert!(model.train_loss.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn dimension_mismatch() {
        let m = step_data();
        let model = gbm_fit(&m, &TrainConfig::default(), GbmTask::Classify).unwrap();
        assert!(matches!(
            model.predict(&Matrix::zeros(1, 3)),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }
}
