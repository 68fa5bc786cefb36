//! Synthetic curve records that satisfy the BSD identity exactly.
//!
//! Log-features are drawn uniformly from fixed ranges chosen to bracket
//! LMFDB magnitudes:
//!
//! | quantity          | distribution                                      |
//! |-------------------|---------------------------------------------------|
//! | `ln Omega`        | U[-8, 2]                                          |
//! | rank              | 0 w.p. 0.926, else uniform on {1, 2, 3}           |
//! | `ln Reg`          | 0 at rank 0, else U[-3, 6]                        |
//! | `ln prod c_p`     | U[0, 8], exponentiated and rounded to an integer  |
//! | torsion           | uniform on {1, ..., 16}                           |
//! | conductor         | log-uniform on [11, 500000]                       |
//!
//! The special value is then solved from the identity so that
//! `tors^2 * L / (Omega * Reg * prod c_p)` reproduces the target order.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Source};
use super::record::{is_perfect_square, CurveRecord};
use crate::error::{Error, Result};
use crate::rng;

pub const LOG_PERIOD_RANGE: (f64, f64) = (-8.0, 2.0);
pub const LOG_REGULATOR_RANGE: (f64, f64) = (-3.0, 6.0);
pub const LOG_TAMAGAWA_RANGE: (f64, f64) = (0.0, 8.0);
pub const MAX_TORSION: u32 = 16;
/// Share of rank-0 curves in the balanced 4-vs-9 LMFDB dataset.
pub const RANK_ZERO_SHARE: f64 = 0.926;
pub const MAX_SYNTH_RANK: u32 = 3;

/// Target |Sha| distribution: order -> relative weight. Serialized as `"4:1,9:1"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ClassSpec(pub BTreeMap<u64, u64>);

impl TryFrom<String> for ClassSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        ClassSpec::parse(&s)
    }
}

impl From<ClassSpec> for String {
    fn from(c: ClassSpec) -> String {
        c.to_string()
    }
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl ClassSpec {
    pub fn new(pairs: &[(u64, u64)]) -> Self {
        ClassSpec(pairs.iter().copied().collect())
    }

    /// Parse `"4:50,9:50"`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidClassSpec(format!("expected sha:weight, got `{part}`")))?;
            let k: u64 = k.trim().parse().map_err(|_| Error::InvalidClassSpec(part.to_string()))?;
            let v: u64 = v.trim().parse().map_err(|_| Error::InvalidClassSpec(part.to_string()))?;
            map.insert(k, v);
        }
        Ok(ClassSpec(map))
    }

    fn validate(&self) -> Result<()> {
        if self.0.is_empty() || self.0.values().all(|&w| w == 0) {
            return Err(Error::InvalidClassSpec("no classes with positive weight".into()));
        }
        for &sha in self.0.keys() {
            if sha == 0 || !is_perfect_square(sha) {
                return Err(Error::InvalidClassSpec(format!("{sha} is not a positive square")));
            }
        }
        Ok(())
    }

    /// Largest-remainder allocation of `n` rows over the classes.
    pub fn counts(&self, n: usize) -> Vec<(u64, usize)> {
        let total: u64 = self.0.values().sum();
        let mut alloc: Vec<(u64, usize, u64)> = self
            .0
            .iter()
            .map(|(&sha, &w)| {
                let exact = n as u128 * w as u128;
                let q = (exact / total as u128) as usize;
                let rem = (exact % total as u128) as u64;
                (sha, q, rem)
            })
            .collect();
        let assigned: usize = alloc.iter().map(|a| a.1).sum();
        let mut order: Vec<usize> = (0..alloc.len()).collect();
        order.sort_by(|&a, &b| alloc[b].2.cmp(&alloc[a].2).then(a.cmp(&b)));
        for &i in order.iter().take(n - assigned) {
            alloc[i].1 += 1;
        }
        alloc.into_iter().map(|(s, c, _)| (s, c)).collect()
    }
}

pub fn synthesize_dataset(n: usize, class_spec: &ClassSpec, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidClassSpec("n must be at least 1".into()));
    }
    class_spec.validate()?;
    let mut rng = rng::seeded(seed);
    let mut targets: Vec<u64> = class_spec
        .counts(n)
        .into_iter()
        .flat_map(|(sha, c)| std::iter::repeat(sha).take(c))
        .collect();
    targets.shuffle(&mut rng);

    let (c_lo, c_hi) = ((11f64).ln(), (500_000f64).ln());
    let records = targets
        .into_iter()
        .enumerate()
        .map(|(i, sha)| {
            let omega = rng.gen_range(LOG_PERIOD_RANGE.0..LOG_PERIOD_RANGE.1).exp();
            let rank = if rng.gen::<f64>() < RANK_ZERO_SHARE {
                0
            } else {
                rng.gen_range(1..=MAX_SYNTH_RANK)
            };
            let reg = if rank == 0 {
                1.0
            } else {
                rng.gen_range(LOG_REGULATOR_RANGE.0..LOG_REGULATOR_RANGE.1).exp()
            };
            let tam = rng
                .gen_range(LOG_TAMAGAWA_RANGE.0..LOG_TAMAGAWA_RANGE.1)
                .exp()
                .round()
                .max(1.0) as u64;
            let tors = rng.gen_range(1..=MAX_TORSION);
            let conductor = rng.gen_range(c_lo..c_hi).exp().round() as u64;
            let special = sha as f64 * omega * reg * tam as f64 / f64::from(tors * tors);
            CurveRecord::bsd(format!("syn.{i}"), conductor, rank, tors, omega, reg, tam, special, Some(sha))
        })
        .collect();
    Dataset::new(records, Source::Synthetic { seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvedata::bsd::{compute_sha_from_bsd, validate_record, SYNTHETIC_TOL};

    #[test]
    fn consistent_by_construction() {
        let ds = synthesize_dataset(100, &ClassSpec::new(&[(4, 50), (9, 50)]), 1).unwrap();
        assert_eq!(ds.len(), 100);
        assert_eq!(ds.records.iter().filter(|r| r.sha_order == Some(4)).count(), 50);
        for r in &ds.records {
            assert!(validate_record(r, SYNTHETIC_TOL).passed, "{r:?}");
            let s = compute_sha_from_bsd(r).unwrap();
            assert!((s - r.sha_order.unwrap() as f64).abs() / s < 1e-10);
            if r.rank == 0 {
                assert_eq!(r.regulator, Some(1.0));
            }
        }
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            synthesize_dataset(10, &ClassSpec::new(&[(3, 10)]), 0),
            Err(Error::InvalidClassSpec(_))
        ));
    }

    #[test]
    fn largest_remainder_counts() {
        let spec = ClassSpec::new(&[(1, 1), (4, 1), (9, 1)]);
        let c = spec.counts(10);
        assert_eq!(c.iter().map(|x| x.1).sum::<usize>(), 10);
        assert_eq!(c, vec![(1, 4), (4, 3), (9, 3)]);
    }

    #[test]
    fn parse_spec() {
        assert_eq!(ClassSpec::parse("4:50, 9:50").unwrap(), ClassSpec::new(&[(4, 50), (9, 50)]));
        assert!(ClassSpec::parse("4-50").is_err());
    }
}
