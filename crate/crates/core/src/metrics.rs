//! Accuracy, Matthews correlation, confusion matrices and threshold curves.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(a, b));
    }
    Ok(())
}

pub fn accuracy<T: PartialEq>(pred: &[T], truth: &[T]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    if pred.is_empty() {
        return Err(Error::Empty);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Binary MCC; 0 when any marginal is empty.
pub fn mcc(pred: &[bool], truth: &[bool]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let (mut tp, mut tn, mut fp, mut fne) = (0u64, 0u64, 0u64, 0u64);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
        }
    }
    Ok(mcc_from_counts(tp, tn, fp, fne))
}

pub fn mcc_from_counts(tp: u64, tn: u64, fp: u64, fne: u64) -> f64 {
    let f = |v: u64| v as f64;
    let denom = f(tp + fp) * f(tp + fne) * f(tn + fp) * f(tn + fne);
    if denom == 0.0 {
        return 0.0;
    }
    ((f(tp) * f(tn) - f(fp) * f(fne)) / denom.sqrt()).clamp(-1.0, 1.0)
}

/// Multiclass MCC (the R_K statistic) over arbitrary labels; 0 when undefined.
pub fn mcc_multiclass<T: Ord + Clone>(pred: &[T], truth: &[T]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let classes: Vec<T> = pred.iter().chain(truth).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let c = confusion_matrix(pred, truth, &classes);
    let s: f64 = pred.len() as f64;
    let trace: f64 = (0..classes.len()).map(|k| c[k][k] as f64).sum();
    let p: Vec<f64> = (0..classes.len()).map(|k| c.iter().map(|row| row[k] as f64).sum()).collect();
    let t: Vec<f64> = c.iter().map(|row| row.iter().sum::<u64>() as f64).collect();
    let pt: f64 = p.iter().zip(&t).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|a| a * a).sum();
    let tt: f64 = t.iter().map(|a| a * a).sum();
    let denom = ((s * s - pp) * (s * s - tt)).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(((trace * s - pt) / denom).clamp(-1.0, 1.0))
}

/// `m[i][j]` counts rows with truth `classes[i]` and prediction `classes[j]`.
/// Labels outside `classes` are ignored.
pub fn confusion_matrix<T: PartialEq>(pred: &[T], truth: &[T], classes: &[T]) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; classes.len()]; classes.len()];
    for (p, t) in pred.iter().zip(truth) {
        let (Some(i), Some(j)) = (classes.iter().position(|c| c == t), classes.iter().position(|c| c == p)) else {
            continue;
        };
        m[i][j] += 1;
    }
    m
}

/// Nearest positive integer, ties away from zero.
pub fn round_sqrt_sha(prediction: f64) -> Result<u64> {
    if !prediction.is_finite() {
        return Err(Error::NonFinite(format!("prediction {prediction}")));
    }
    Ok(prediction.round().max(1.0) as u64)
}

/// Binarization used for MCC on multi-valued |Sha|: nontrivial is positive.
pub fn is_nontrivial(sqrt_sha: u64) -> bool {
    sqrt_sha != 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    /// `None` when no row reaches the threshold.
    pub accuracy: Option<f64>,
    pub support: usize,
}

/// Accuracy restricted to rows with `truth >= t`, for each threshold.
pub fn threshold_accuracy_curve(pred_sqrt: &[u64], truth_sqrt: &[u64], thresholds: &[f64]) -> Result<Vec<ThresholdPoint>> {
    check_lengths(pred_sqrt.len(), truth_sqrt.len())?;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let (mut hits, mut support) = (0usize, 0usize);
            for (&p, &y) in pred_sqrt.iter().zip(truth_sqrt) {
                if y as f64 >= t {
                    support += 1;
                    hits += usize::from(p == y);
                }
            }
            ThresholdPoint {
                threshold: t,
                accuracy: (support > 0).then(|| hits as f64 / support as f64),
                support,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    /// Binary MCC; for multi-valued |Sha| after trivial/nontrivial binarization.
    pub mcc: f64,
    /// Multiclass MCC over the observed |Sha| values, for regression targets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcc_multiclass: Option<f64>,
    /// Row labels of `confusion` (class ids or sqrt|Sha| values).
    pub classes: Vec<u64>,
    pub confusion: Vec<Vec<u64>>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_curve: Option<Vec<ThresholdPoint>>,
}

impl EvaluationReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// Binary classification report; class 1 is positive.
pub fn evaluate_binary(pred: &[usize], truth: &[usize]) -> Result<EvaluationReport> {
    let acc = accuracy(pred, truth)?;
    let pb: Vec<bool> = pred.iter().map(|&p| p == 1).collect();
    let tb: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
    Ok(EvaluationReport {
        accuracy: acc,
        mcc: mcc(&pb, &tb)?,
        mcc_multiclass: None,
        classes: vec![0, 1],
        confusion: confusion_matrix(pred, truth, &[0, 1]),
        n: pred.len(),
        threshold_curve: None,
    })
}

/// Report for sqrt|Sha| regression: predictions are rounded first.
pub fn evaluate_sqrt_sha(raw_pred: &[f64], truth_sqrt: &[f64], thresholds: Option<&[f64]>) -> Result<EvaluationReport> {
    check_lengths(raw_pred.len(), truth_sqrt.len())?;
    let pred: Vec<u64> = raw_pred.iter().map(|&p| round_sqrt_sha(p)).collect::<Result<_>>()?;
    let truth: Vec<u64> = truth_sqrt.iter().map(|&t| round_sqrt_sha(t)).collect::<Result<_>>()?;
    let classes: Vec<u64> = pred.iter().chain(&truth).copied().collect::<BTreeSet<_>>().into_iter().collect();
    let pb: Vec<bool> = pred.iter().map(|&p| is_nontrivial(p)).collect();
    let tb: Vec<bool> = truth.iter().map(|&t| is_nontrivial(t)).collect();
    Ok(EvaluationReport {
        accuracy: accuracy(&pred, &truth)?,
        mcc: mcc(&pb, &tb)?,
        mcc_multiclass: Some(mcc_multiclass(&pred, &truth)?),
        confusion: confusion_matrix(&pred, &truth, &classes),
        classes,
        n: pred.len(),
        threshold_curve: thresholds
            .map(|ts| threshold_accuracy_curve(&pred, &truth, ts))
            .transpose()?,
    })
}

/// Summary row shared by experiment CSV outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub feature_set: String,
    pub accuracy: f64,
    pub mcc: f64,
    pub n: usize,
}

pub fn write_report_rows(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 2], &[1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 2], &[2, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1, 4, 9], &[1, 4, 4, 9]).unwrap(), 0.75);
        assert!(matches!(accuracy::<u8>(&[], &[]), Err(Error::Empty)));
        assert!(matches!(accuracy(&[1], &[1, 2]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn mcc_cases() {
        let t = [true, false, true, false];
        assert_eq!(mcc(&t, &t).unwrap(), 1.0);
        assert_eq!(mcc(&[true; 4], &t).unwrap(), 0.0);
        let v = mcc_from_counts(3, 4, 1, 2);
        assert!((v - 10.0 / 600f64.sqrt()).abs() < 1e-15);
        assert!((v - 0.40825).abs() < 1e-5);
    }

    #[test]
    fn multiclass_reduces_to_binary() {
        let p = [1u64, 1, 0, 0, 1, 0, 1, 0, 0, 0];
        let t = [1u64, 1, 1, 0, 0, 0, 1, 1, 0, 0];
        let pb: Vec<bool> = p.iter().map(|&x| x == 1).collect();
        let tb: Vec<bool> = t.iter().map(|&x| x == 1).collect();
        let a = mcc(&pb, &tb).unwrap();
        let b = mcc_multiclass(&p, &t).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sqrt_sha(1.49).unwrap(), 1);
        assert_eq!(round_sqrt_sha(2.5).unwrap(), 3);
        assert_eq!(round_sqrt_sha(0.2).unwrap(), 1);
        assert_eq!(round_sqrt_sha(-4.0).unwrap(), 1);
        assert_eq!(round_sqrt_sha(3.01).unwrap().pow(2), 9);
        assert!(round_sqrt_sha(f64::NAN).is_err());
    }

    #[test]
    fn threshold_curve() {
        let c = threshold_accuracy_curve(&[1, 2, 2, 3], &[1, 1, 2, 3], &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(c[0].accuracy, Some(0.75));
        assert_eq!((c[1].accuracy, c[1].support), (Some(1.0), 2));
        assert_eq!((c[2].accuracy, c[2].support), (None, 0));
    }

    #[test]
    fn sqrt_report() {
        let r = evaluate_sqrt_sha(&[0.9, 2.2, 1.4, 3.0], &[1.0, 2.0, 2.0, 3.0], None).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.classes, vec![1, 2, 3]);
        let total: u64 = r.confusion.iter().flatten().sum();
        assert_eq!(total as usize, r.n);
    }

    #[test]
    fn constant_predictor_zero() {
        let r = evaluate_sqrt_sha(&[1.0; 5], &[1.0, 1.0, 2.0, 1.0, 3.0], None).unwrap();
        assert_eq!(r.mcc, 0.0);
        assert_eq!(r.mcc_multiclass, Some(0.0));
    }
}
