//! The BSD identity solved for |Sha|, and record validation against it.

use serde::{Deserialize, Serialize};

use super::record::{is_perfect_square, CurveRecord, Feature, AP_PRIMES};
use crate::error::{Error, Result};

/// Default relative tolerance for floating-point data ingested from LMFDB.
pub const REAL_DATA_TOL: f64 = 1e-4;
/// Tolerance for synthetic data, where the identity holds by construction.
pub const SYNTHETIC_TOL: f64 = 1e-10;

/// `tors^2 * L^(r)(E,1)/r! / (Omega * Reg * prod c_p)`, unrounded.
pub fn compute_sha_from_bsd(rec: &CurveRecord) -> Result<f64> {
    let tors = positive(rec, Feature::Torsion)?;
    let special = positive(rec, Feature::SpecialValue)?;
    let omega = positive(rec, Feature::RealPeriod)?;
    let reg = positive(rec, Feature::Regulator)?;
    let tam = positive(rec, Feature::Tamagawa)?;
    Ok(tors * tors * special / (omega * reg * tam))
}

fn positive(rec: &CurveRecord, f: Feature) -> Result<f64> {
    let v = rec.feature_or_err(f)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonPositiveFeature {
            feature: f.name(),
            value: v,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub label: String,
    pub passed: bool,
    pub reasons: Vec<String>,
    /// Relative BSD residual `|computed - sha| / sha`, when it could be evaluated.
    pub bsd_residual: Option<f64>,
}

/// Check the record's type invariants and, when `sha_order` is present, the
/// BSD identity to relative tolerance `tol`.
pub fn validate_record(rec: &CurveRecord, tol: f64) -> ValidationReport {
    let mut reasons = Vec::new();

    if rec.label.is_empty() {
        reasons.push("empty label".to_string());
    }
    if rec.conductor == 0 {
        reasons.push("conductor must be positive".to_string());
    }
    if rec.torsion_order == Some(0) {
        reasons.push("torsion_order must be >= 1".to_string());
    }
    if rec.tamagawa_product == Some(0) {
        reasons.push("tamagawa_product must be >= 1".to_string());
    }
    for (name, v) in [
        ("real_period", rec.real_period),
        ("regulator", rec.regulator),
        ("special_value", rec.special_value),
    ] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                reasons.push(format!("{name} must be positive and finite, got {v}"));
            }
        }
    }
    if rec.rank == 0 {
        if let Some(reg) = rec.regulator {
            if (reg - 1.0).abs() > 1e-12 {
                reasons.push(format!("rank 0 requires regulator 1, got {reg}"));
            }
        }
    }
    if let Some(ap) = &rec.ap_values {
        if ap.len() != AP_PRIMES.len() {
            reasons.push(format!("expected {} a_p values, got {}", AP_PRIMES.len(), ap.len()));
        }
    }

    let mut bsd_residual = None;
    if let Some(sha) = rec.sha_order {
        if sha == 0 || !is_perfect_square(sha) {
            reasons.push(format!("sha_order {sha} is not a positive square"));
        }
        match compute_sha_from_bsd(rec) {
            Ok(computed) if sha > 0 => {
                let rel = (computed - sha as f64).abs() / sha as f64;
                bsd_residual = Some(rel);
                if !(rel <= tol) {
                    reasons.push(format!(
                        "BSD inconsistency: formula gives {computed:.6}, sha_order is {sha} (rel err {rel:.2e})"
                    ));
                }
            }
            Ok(_) => {}
            Err(e) => reasons.push(e.to_string()),
        }
    }

    ValidationReport {
        label: rec.label.clone(),
        passed: reasons.is_empty(),
        reasons,
        bsd_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(tors: u32, l: f64, omega: f64, reg: f64, tam: u64, sha: Option<u64>) -> CurveRecord {
        let rank = if reg == 1.0 { 0 } else { 1 };
        CurveRecord::bsd("t", 11, rank, tors, omega, reg, tam, l, sha)
    }

    #[test]
    fn direct_arithmetic() {
        assert_eq!(compute_sha_from_bsd(&rec(1, 0.5, 0.5, 1.0, 1, None)).unwrap(), 1.0);
        assert_eq!(compute_sha_from_bsd(&rec(2, 1.0, 0.5, 0.5, 1, None)).unwrap(), 16.0);
    }

    #[test]
    fn missing_and_nonpositive_features() {
        let mut r = rec(1, 0.5, 0.5, 1.0, 1, None);
        r.special_value = None;
        assert!(matches!(
            compute_sha_from_bsd(&r),
            Err(Error::MissingFeature { ref feature, .. }) if feature == "special_value"
        ));
        let r = rec(1, 0.5, -0.5, 1.0, 1, None);
        assert!(matches!(compute_sha_from_bsd(&r), Err(Error::NonPositiveFeature { .. })));
    }

    #[test]
    fn consistent_record_passes() {
        let r = rec(2, 2.25, 0.5, 1.0, 2, Some(9));
        let report = validate_record(&r, 1e-6);
        assert!(report.passed, "{:?}", report.reasons);
        assert_eq!(report.bsd_residual, Some(0.0));
    }

    #[test]
    fn doubled_sha_fails() {
        let mut r = rec(2, 2.25, 0.5, 1.0, 2, Some(9));
        r.sha_order = Some(18);
        let report = validate_record(&r, 1e-6);
        assert!(!report.passed);
        assert!(report.reasons.iter().any(|m| m.contains("BSD inconsistency")));
        assert!(report.reasons.iter().any(|m| m.contains("not a positive square")));
    }

    #[test]
    fn rank_zero_needs_trivial_regulator() {
        let mut r = rec(1, 1.0, 0.5, 1.0, 1, None);
        r.regulator = Some(2.0);
        let report = validate_record(&r, 1e-6);
        assert!(!report.passed);
        assert!(report.reasons[0].contains("regulator"));
    }

    #[test]
    fn prediction_target_without_special_value_passes() {
        let mut r = rec(1, 1.0, 0.5, 3.0, 4, None);
        r.special_value = None;
        assert!(validate_record(&r, 1e-6).passed);
    }
}
