//! Client for the LMFDB elliptic-curve REST API.
//!
//! Curve-level fields (`lmfdb_label`, `conductor`, `rank`, `torsion`, `sha`,
//! `regulator`) come from the `ec_curvedata` collection and the BSD
//! quantities (`real_period`, `special_value`, `tamagawa_product`) from
//! `ec_mwbsd`; the two are joined on `lmfdb_label`. Responses are cached on
//! disk keyed by a hash of the request URL.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Duration;

use log::{debug, warn};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::bsd::{validate_record, REAL_DATA_TOL};
use super::dataset::{hex, Dataset, Source};
use super::record::CurveRecord;
use crate::error::{Error, Result};

pub const DEFAULT_BASE_URL: &str = "https://www.lmfdb.org/api";
pub const BASE_URL_ENV: &str = "SHAML_LMFDB_URL";
pub const CACHE_DIR_ENV: &str = "SHAML_CACHE_DIR";
pub const DEFAULT_LIMIT_CAP: usize = 10_000;

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LmfdbQuery {
    pub label: Option<String>,
    /// Inclusive lower bound.
    pub conductor_min: Option<u64>,
    /// Exclusive upper bound.
    pub conductor_below: Option<u64>,
    pub rank: Option<u32>,
    pub sha_order: Option<u64>,
}

impl LmfdbQuery {
    fn params(&self) -> Vec<(String, String)> {
        let mut p = Vec::new();
        if let Some(l) = &self.label {
            p.push(("lmfdb_label".into(), l.clone()));
        }
        match (self.conductor_min, self.conductor_below) {
            (None, None) => {}
            (lo, hi) => {
                let mut parts = Vec::new();
                if let Some(lo) = lo {
                    parts.push(format!("\"$gte\":{lo}"));
                }
                if let Some(hi) = hi {
                    parts.push(format!("\"$lt\":{hi}"));
                }
                p.push(("conductor".into(), format!("py{{{}}}", parts.join(","))));
            }
        }
        if let Some(r) = self.rank {
            p.push(("rank".into(), format!("i{r}")));
        }
        if let Some(s) = self.sha_order {
            p.push(("sha".into(), format!("i{s}")));
        }
        p
    }

    fn matches(&self, r: &CurveRecord) -> bool {
        self.label.as_ref().is_none_or(|l| *l == r.label)
            && self.conductor_min.is_none_or(|lo| r.conductor >= lo)
            && self.conductor_below.is_none_or(|hi| r.conductor < hi)
            && self.rank.is_none_or(|k| r.rank == k)
            && self.sha_order.is_none_or(|s| r.sha_order == Some(s))
    }
}

#[derive(Debug, Clone)]
pub struct LmfdbClient {
    pub base_url: String,
    pub cache_dir: Option<PathBuf>,
    pub limit_cap: usize,
    pub retries: u32,
    pub timeout: Duration,
}

impl Default for LmfdbClient {
    fn default() -> Self {
        LmfdbClient {
            base_url: DEFAULT_BASE_URL.to_string(),
            cache_dir: None,
            limit_cap: DEFAULT_LIMIT_CAP,
            retries: 3,
            timeout: Duration::from_secs(60),
        }
    }
}

impl LmfdbClient {
    /// Client configured from `SHAML_LMFDB_URL` and `SHAML_CACHE_DIR`.
    pub fn from_env() -> Self {
        LmfdbClient {
            base_url: std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string()),
            cache_dir: std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from),
            ..Default::default()
        }
    }

    pub fn with_base_url(mut self, url: impl Into<String>) -> Self {
        self.base_url = url.into();
        self
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    fn url(&self, collection: &str, params: &[(String, String)]) -> String {
        let mut url = format!("{}/{}/?_format=json", self.base_url.trim_end_matches('/'), collection);
        for (k, v) in params {
            url.push('&');
            url.push_str(&encode(k));
            url.push('=');
            url.push_str(&encode(v));
        }
        url
    }

    fn cache_path(&self, url: &str) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("{}.json", hex(&Sha256::digest(url.as_bytes())))))
    }

    fn get_json(&self, url: &str) -> Result<Value> {
        if let Some(p) = self.cache_path(url) {
            if let Ok(text) = std::fs::read_to_string(&p) {
                debug!("cache hit {}", p.display());
                return Ok(serde_json::from_str(&text)?);
            }
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(250 << attempt.min(4)));
            }
            match agent.get(url).call() {
                Ok(mut resp) => match resp.body_mut().read_to_string() {
                    Ok(text) => {
                        let v: Value = serde_json::from_str(&text)?;
                        if let Some(p) = self.cache_path(url) {
                            if let Some(dir) = p.parent() {
                                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                            }
                            std::fs::write(&p, &text).map_err(|e| Error::io(&p, e))?;
                        }
                        return Ok(v);
                    }
                    Err(e) => last = e.to_string(),
                },
                Err(e) => last = e.to_string(),
            }
            warn!("LMFDB request failed (attempt {}): {last}", attempt + 1);
        }
        Err(Error::Network(format!("{url}: {last}")))
    }
}

fn encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

fn data_array(v: &Value) -> Result<&Vec<Value>> {
    v.get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::SchemaDrift("data".into()))
}

fn field<'a>(obj: &'a Value, collection: &str, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .filter(|v| !v.is_null())
        .ok_or_else(|| Error::SchemaDrift(format!("{collection}.{name}")))
}

fn as_u64(v: &Value, collection: &str, name: &str) -> Result<u64> {
    v.as_u64()
        .or_else(|| v.as_f64().filter(|f| f.fract() == 0.0 && *f >= 0.0).map(|f| f as u64))
        .ok_or_else(|| Error::SchemaDrift(format!("{collection}.{name} (expected integer)")))
}

fn as_f64(v: &Value, collection: &str, name: &str) -> Result<f64> {
    v.as_f64()
        .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
        .ok_or_else(|| Error::SchemaDrift(format!("{collection}.{name} (expected number)")))
}

/// Map one `ec_curvedata` object plus its `ec_mwbsd` partner to a record.
pub fn record_from_json(curve: &Value, bsd: &Value) -> Result<CurveRecord> {
    const C: &str = "ec_curvedata";
    const B: &str = "ec_mwbsd";
    let label = field(curve, C, "lmfdb_label")?
        .as_str()
        .ok_or_else(|| Error::SchemaDrift(format!("{C}.lmfdb_label (expected string)")))?
        .to_string();
    Ok(CurveRecord {
        label,
        conductor: as_u64(field(curve, C, "conductor")?, C, "conductor")?,
        rank: as_u64(field(curve, C, "rank")?, C, "rank")? as u32,
        torsion_order: Some(as_u64(field(curve, C, "torsion")?, C, "torsion")? as u32),
        real_period: Some(as_f64(field(bsd, B, "real_period")?, B, "real_period")?),
        regulator: Some(as_f64(field(curve, C, "regulator")?, C, "regulator")?),
        tamagawa_product: Some(as_u64(field(bsd, B, "tamagawa_product")?, B, "tamagawa_product")?),
        special_value: Some(as_f64(field(bsd, B, "special_value")?, B, "special_value")?),
        sha_order: Some(as_u64(field(curve, C, "sha")?, C, "sha")?),
        ap_values: None,
        extras: None,
    })
}

/// Fetch up to `limit` curves matching `query`, validated at the real-data tolerance.
pub fn fetch_lmfdb(client: &LmfdbClient, query: &LmfdbQuery, limit: usize) -> Result<Dataset> {
    if limit == 0 {
        return Err(Error::EmptyResult);
    }
    if limit > client.limit_cap {
        return Err(Error::Config(format!("limit {limit} exceeds cap {}", client.limit_cap)));
    }
    let mut params = query.params();
    params.push(("_limit".into(), limit.to_string()));
    params.push((
        "_fields".into(),
        "lmfdb_label,conductor,rank,torsion,sha,regulator".into(),
    ));
    let curves_url = client.url("ec_curvedata", &params);
    let curves_json = client.get_json(&curves_url)?;
    let curves = data_array(&curves_json)?;
    if curves.is_empty() {
        return Err(Error::EmptyResult);
    }

    let labels: Vec<String> = curves
        .iter()
        .map(|c| {
            field(c, "ec_curvedata", "lmfdb_label")
                .map(|v| v.as_str().unwrap_or_default().to_string())
        })
        .collect::<Result<_>>()?;
    let in_list = labels.iter().map(|l| format!("\"{l}\"")).collect::<Vec<_>>().join(",");
    let bsd_params = vec![
        ("lmfdb_label".to_string(), format!("py{{\"$in\":[{in_list}]}}")),
        ("_limit".to_string(), limit.to_string()),
        (
            "_fields".to_string(),
            "lmfdb_label,real_period,special_value,tamagawa_product".to_string(),
        ),
    ];
    let bsd_json = client.get_json(&client.url("ec_mwbsd", &bsd_params))?;
    let by_label: HashMap<&str, &Value> = data_array(&bsd_json)?
        .iter()
        .filter_map(|b| b.get("lmfdb_label").and_then(Value::as_str).map(|l| (l, b)))
        .collect();

    let mut records = Vec::with_capacity(curves.len());
    for (c, label) in curves.iter().zip(&labels) {
        let b = by_label
            .get(label.as_str())
            .ok_or_else(|| Error::SchemaDrift(format!("ec_mwbsd entry for {label}")))?;
        let rec = record_from_json(c, b)?;
        let report = validate_record(&rec, REAL_DATA_TOL);
        if !report.passed {
            warn!("dropping {}: {}", rec.label, report.reasons.join("; "));
            continue;
        }
        if !query.matches(&rec) {
            warn!("dropping {}: does not satisfy the query filter", rec.label);
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::EmptyResult);
    }
    Dataset::new(records, Source::Api { query: curves_url })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_params_encode_filters() {
        let q = LmfdbQuery {
            conductor_below: Some(100),
            sha_order: Some(9),
            ..Default::default()
        };
        let c = LmfdbClient::default().with_base_url("http://h/api/");
        let url = c.url("ec_curvedata", &q.params());
        assert_eq!(
            url,
            "http://h/api/ec_curvedata/?_format=json&conductor=py%7B%22%24lt%22%3A100%7D&sha=i9"
        );
    }

    #[test]
    fn schema_drift_names_field() {
        let curve = serde_json::json!({"lmfdb_label": "11.a1", "conductor": 11, "rank": 0, "torsion": 1, "regulator": 1.0});
        let bsd = serde_json::json!({"real_period": 1.0, "special_value": 1.0, "tamagawa_product": 1});
        match record_from_json(&curve, &bsd) {
            Err(Error::SchemaDrift(f)) => assert_eq!(f, "ec_curvedata.sha"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_limit_is_empty() {
        assert!(matches!(
            fetch_lmfdb(&LmfdbClient::default(), &LmfdbQuery::default(), 0),
            Err(Error::EmptyResult)
        ));
    }
}
