use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::record::{CurveRecord, Feature};
use crate::error::{Error, Result};
use crate::rng;

pub const SCHEMA_VERSION: u32 = 1;

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    File { path: String },
    Api { query: String },
    Synthetic { seed: u64 },
    Derived { from: Box<Source>, op: String },
    Memory,
}

impl Source {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Source::Synthetic { seed } => Some(*seed),
            Source::Derived { from, .. } => from.seed(),
            _ => None,
        }
    }

    fn derive(&self, op: impl Into<String>) -> Source {
        Source::Derived {
            from: Box::new(self.clone()),
            op: op.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<CurveRecord>,
    pub source: Source,
    pub schema_version: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

/// Row count plus a SHA-256 of the canonical CSV serialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub rows: usize,
    pub content_hash: String,
}

impl Dataset {
    pub fn new(records: Vec<CurveRecord>, source: Source) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.label.as_str()) {
                return Err(Error::DuplicateLabel(r.label.clone()));
            }
        }
        Ok(Dataset {
            records,
            source,
            schema_version: SCHEMA_VERSION,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_ap(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.ap_values.is_some())
    }

    /// Keep the records matching `pred`, preserving order.
    pub fn filter(&self, op: &str, pred: impl Fn(&CurveRecord) -> bool) -> Dataset {
        Dataset {
            records: self.records.iter().filter(|r| pred(r)).cloned().collect(),
            source: self.source.derive(op),
            schema_version: self.schema_version,
        }
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let mut buf = Vec::new();
        super::csv_io::write_records(&mut buf, &self.records).expect("in-memory CSV write");
        let digest = Sha256::digest(&buf);
        Fingerprint {
            rows: self.records.len(),
            content_hash: hex(&digest),
        }
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Field used to group records into classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassField {
    ShaOrder,
    Feature(Feature),
}

impl ClassField {
    fn value(self, r: &CurveRecord) -> Option<f64> {
        match self {
            ClassField::ShaOrder => r.sha_order.map(|s| s as f64),
            ClassField::Feature(f) => r.feature(f),
        }
    }
}

impl FromStr for ClassField {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sha_order" | "sha" => Ok(ClassField::ShaOrder),
            other => other.parse().map(ClassField::Feature),
        }
    }
}

impl fmt::Display for ClassField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassField::ShaOrder => f.write_str("sha_order"),
            ClassField::Feature(feat) => write!(f, "{feat}"),
        }
    }
}

/// Equal-size uniform sample of each requested class; the per-class size is
/// the smallest class count. Output keeps the input order.
pub fn balanced_subset(
    ds: &Dataset,
    class_field: ClassField,
    classes: &[u64],
    seed: u64,
) -> Result<Dataset> {
    let mut rng = rng::seeded(seed);
    let groups: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| {
            ds.records
                .iter()
                .enumerate()
                .filter(|(_, r)| class_field.value(r) == Some(c as f64))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    for (g, &c) in groups.iter().zip(classes) {
        if g.is_empty() {
            return Err(Error::EmptyClass {
                field: class_field.to_string(),
                value: c.to_string(),
            });
        }
    }
    let m = groups.iter().map(Vec::len).min().unwrap_or(0);
    let mut picked = Vec::with_capacity(m * classes.len());
    for mut g in groups {
        g.shuffle(&mut rng);
        picked.extend_from_slice(&g[..m]);
    }
    picked.sort_unstable();
    let records = picked.into_iter().map(|i| ds.records[i].clone()).collect();
    let op = format!("balanced_subset({class_field} in {classes:?}, seed={seed})");
    Ok(Dataset {
        records,
        source: ds.source.derive(op),
        schema_version: ds.schema_version,
    })
}

/// Seeded shuffle, then the first `round(test_fraction * n)` rows become the test set.
pub fn train_test_split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = ds.len();
    let n_test = (spec.test_fraction * n as f64).round() as usize;
    if n < 2 || !(0.0..1.0).contains(&spec.test_fraction) || n_test == 0 || n_test >= n {
        return Err(Error::DegenerateSplit { n, test: n_test });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(spec.seed));
    let take = |ix: &[usize], op: &str| Dataset {
        records: ix.iter().map(|&i| ds.records[i].clone()).collect(),
        source: ds.source.derive(format!("{op}(fraction={}, seed={})", spec.test_fraction, spec.seed)),
        schema_version: ds.schema_version,
    };
    let test = take(&idx[..n_test], "split_test");
    let train = take(&idx[n_test..], "split_train");
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(shas: &[u64]) -> Dataset {
        let records = shas
            .iter()
            .enumerate()
            .map(|(i, &s)| CurveRecord::bsd(format!("c{i}"), 11 + i as u64, 0, 1, 1.0, 1.0, 1, s as f64, Some(s)))
            .collect();
        Dataset::new(records, Source::Memory).unwrap()
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut ds = toy(&[1, 4]);
        ds.records[1].label = "c0".into();
        assert!(matches!(
            Dataset::new(ds.records, Source::Memory),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn balanced_min_rule() {
        let shas: Vec<u64> = std::iter::repeat(4).take(10).chain(std::iter::repeat(9).take(7)).collect();
        let ds = toy(&shas);
        let b = balanced_subset(&ds, ClassField::ShaOrder, &[4, 9], 3).unwrap();
        assert_eq!(b.records.iter().filter(|r| r.sha_order == Some(4)).count(), 7);
        assert_eq!(b.records.iter().filter(|r| r.sha_order == Some(9)).count(), 7);
        let again = balanced_subset(&ds, ClassField::ShaOrder, &[4, 9], 3).unwrap();
        assert_eq!(b.records, again.records);
    }

    #[test]
    fn balanced_empty_class_named() {
        let ds = toy(&[4, 4]);
        match balanced_subset(&ds, ClassField::ShaOrder, &[4, 9], 0) {
            Err(Error::EmptyClass { value, .. }) => assert_eq!(value, "9"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn split_sizes_follow_rounding() {
        let ds = toy(&[1; 10]);
        for seed in 0..5 {
            let (tr, te) = train_test_split(&ds, SplitSpec { test_fraction: 0.2, seed }).unwrap();
            assert_eq!((tr.len(), te.len()), (8, 2));
        }
    }

    #[test]
    fn split_degenerate() {
        let ds = toy(&[1]);
        assert!(matches!(
            train_test_split(&ds, SplitSpec::default()),
            Err(Error::DegenerateSplit { .. })
        ));
        let ds = toy(&[1, 1]);
        assert!(train_test_split(&ds, SplitSpec { test_fraction: 0.1, seed: 0 }).is_err());
    }

    #[test]
    fn class_field_parse() {
        assert_eq!("sha_order".parse::<ClassField>().unwrap(), ClassField::ShaOrder);
        assert_eq!("rank".parse::<ClassField>().unwrap(), ClassField::Feature(Feature::Rank));
    }
}
