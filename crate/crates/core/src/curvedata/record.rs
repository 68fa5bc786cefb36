use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The first 100 primes; `ap_values[i]` is the Frobenius trace at `AP_PRIMES[i]`.
pub const AP_PRIMES: [u32; 100] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307,
    311, 313, 317, 331, 337, 347, 349, 353, 359, 367, 373, 379, 383, 389, 397, 401, 409, 419, 421,
    431, 433, 439, 443, 449, 457, 461, 463, 467, 479, 487, 491, 499, 503, 509, 521, 523, 541,
];

pub const N_AP: usize = AP_PRIMES.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extras {
    pub adelic_level: i64,
    pub adelic_index: i64,
    pub adelic_genus: i64,
    pub kodaira_encoded: i64,
}

/// Invariants of one elliptic curve over Q.
///
/// The five BSD quantities are optional so that prediction targets (for
/// example a curve whose special value is out of computational reach) can
/// be represented; ingestion of training data requires all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub label: String,
    pub conductor: u64,
    pub rank: u32,
    pub torsion_order: Option<u32>,
    pub real_period: Option<f64>,
    pub regulator: Option<f64>,
    pub tamagawa_product: Option<u64>,
    pub special_value: Option<f64>,
    pub sha_order: Option<u64>,
    pub ap_values: Option<Vec<i32>>,
    pub extras: Option<Extras>,
}

impl CurveRecord {
    /// A record with every BSD feature set and no optional groups.
    #[allow(clippy::too_many_arguments)]
    pub fn bsd(
        label: impl Into<String>,
        conductor: u64,
        rank: u32,
        torsion_order: u32,
        real_period: f64,
        regulator: f64,
        tamagawa_product: u64,
        special_value: f64,
        sha_order: Option<u64>,
    ) -> Self {
        CurveRecord {
            label: label.into(),
            conductor,
            rank,
            torsion_order: Some(torsion_order),
            real_period: Some(real_period),
            regulator: Some(regulator),
            tamagawa_product: Some(tamagawa_product),
            special_value: Some(special_value),
            sha_order,
            ap_values: None,
            extras: None,
        }
    }

    /// Numeric value of `feature`, or `None` when the record does not carry it.
    pub fn feature(&self, feature: Feature) -> Option<f64> {
        match feature {
            Feature::SpecialValue => self.special_value,
            Feature::Torsion => self.torsion_order.map(f64::from),
            Feature::RealPeriod => self.real_period,
            Feature::Regulator => self.regulator,
            Feature::Tamagawa => self.tamagawa_product.map(|c| c as f64),
            Feature::Rank => Some(f64::from(self.rank)),
            Feature::Conductor => Some(self.conductor as f64),
            Feature::Ap(i) => self
                .ap_values
                .as_ref()
                .and_then(|v| v.get(i))
                .map(|&a| f64::from(a)),
            Feature::AdelicLevel => self.extras.map(|e| e.adelic_level as f64),
            Feature::AdelicIndex => self.extras.map(|e| e.adelic_index as f64),
            Feature::AdelicGenus => self.extras.map(|e| e.adelic_genus as f64),
            Feature::Kodaira => self.extras.map(|e| e.kodaira_encoded as f64),
        }
    }

    pub fn feature_or_err(&self, feature: Feature) -> Result<f64> {
        self.feature(feature).ok_or_else(|| Error::MissingFeature {
            label: self.label.clone(),
            feature: feature.name(),
        })
    }

    /// `sqrt(|Sha|)`, exact for square orders.
    pub fn sqrt_sha(&self) -> Option<u64> {
        self.sha_order.map(isqrt)
    }
}

/// Integer square root (floor).
pub fn isqrt(n: u64) -> u64 {
    n.isqrt()
}

pub fn is_perfect_square(n: u64) -> bool {
    let r = isqrt(n);
    r * r == n
}

/// A named numeric column derivable from a [`CurveRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    SpecialValue,
    Torsion,
    RealPeriod,
    Regulator,
    Tamagawa,
    Rank,
    Conductor,
    /// Index into [`AP_PRIMES`].
    Ap(usize),
    AdelicLevel,
    AdelicIndex,
    AdelicGenus,
    Kodaira,
}

/// The quantities on the right-hand side of the BSD formula, in canonical order.
pub const BSD_FEATURES: [Feature; 5] = [
    Feature::SpecialValue,
    Feature::Torsion,
    Feature::RealPeriod,
    Feature::Regulator,
    Feature::Tamagawa,
];

impl Feature {
    pub fn name(self) -> String {
        match self {
            Feature::SpecialValue => "special_value".into(),
            Feature::Torsion => "torsion_order".into(),
            Feature::RealPeriod => "real_period".into(),
            Feature::Regulator => "regulator".into(),
            Feature::Tamagawa => "tamagawa_product".into(),
            Feature::Rank => "rank".into(),
            Feature::Conductor => "conductor".into(),
            Feature::Ap(i) => format!("ap_{}", AP_PRIMES[i]),
            Feature::AdelicLevel => "adelic_level".into(),
            Feature::AdelicIndex => "adelic_index".into(),
            Feature::AdelicGenus => "adelic_genus".into(),
            Feature::Kodaira => "kodaira_encoded".into(),
        }
    }

    /// Whether the feature is strictly positive on every valid record.
    pub fn is_positive(self) -> bool {
        matches!(
            self,
            Feature::SpecialValue
                | Feature::Torsion
                | Feature::RealPeriod
                | Feature::Regulator
                | Feature::Tamagawa
                | Feature::Conductor
        )
    }

    pub fn all_ap() -> impl Iterator<Item = Feature> {
        (0..N_AP).map(Feature::Ap)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "special_value" => Feature::SpecialValue,
            "torsion_order" | "torsion" => Feature::Torsion,
            "real_period" => Feature::RealPeriod,
            "regulator" => Feature::Regulator,
            "tamagawa_product" => Feature::Tamagawa,
            "rank" => Feature::Rank,
            "conductor" => Feature::Conductor,
            "adelic_level" => Feature::AdelicLevel,
            "adelic_index" => Feature::AdelicIndex,
            "adelic_genus" => Feature::AdelicGenus,
            "kodaira_encoded" => Feature::Kodaira,
            other => {
                let p: u32 = other
                    .strip_prefix("ap_")
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| Error::UnknownFeature(other.to_string()))?;
                let idx = AP_PRIMES
                    .iter()
                    .position(|&q| q == p)
                    .ok_or_else(|| Error::UnknownFeature(other.to_string()))?;
                Feature::Ap(idx)
            }
        })
    }
}

impl Serialize for Feature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ap_primes_are_the_first_hundred() {
        let mut primes = Vec::new();
        let mut n = 2u32;
        while primes.len() < 100 {
            if (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0) {
                primes.push(n);
            }
            n += 1;
        }
        assert_eq!(primes, AP_PRIMES.to_vec());
        assert_eq!(AP_PRIMES[99], 541);
    }

    #[test]
    fn feature_names_round_trip() {
        for f in BSD_FEATURES
            .iter()
            .copied()
            .chain([Feature::Rank, Feature::Conductor, Feature::Kodaira])
            .chain(Feature::all_ap())
        {
            assert_eq!(f.name().parse::<Feature>().unwrap(), f);
        }
        assert!("ap_4".parse::<Feature>().is_err());
        assert!("height".parse::<Feature>().is_err());
    }

    #[test]
    fn isqrt_edges() {
        assert_eq!(isqrt(0), 0);
        assert_eq!(isqrt(1), 1);
        assert_eq!(isqrt(8), 2);
        assert_eq!(isqrt(9), 3);
        assert_eq!(isqrt(u64::MAX), 4_294_967_295);
        assert!(is_perfect_square(1_059_277_340_944)); // 1029212^2
        assert!(!is_perfect_square(3));
    }
}
