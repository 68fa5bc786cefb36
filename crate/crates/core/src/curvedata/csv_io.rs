//! CSV ingestion and export.
//!
//! Column schema (header required, UTF-8, `.` decimal separator):
//!
//! ```text
//! label,conductor,rank,torsion_order,real_period,regulator,tamagawa_product,special_value,sha_order
//!   [,ap_2,...,ap_541]
//!   [,adelic_level,adelic_index,adelic_genus,kodaira_encoded]
//! ```
//!
//! The two optional groups must be present as whole groups. Empty BSD or
//! `sha_order` cells load as absent fields; an empty or malformed cell in an
//! optional group drops that group for the row.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use super::bsd::{validate_record, REAL_DATA_TOL};
use super::dataset::{Dataset, Fingerprint, Source, SCHEMA_VERSION};
use super::record::{CurveRecord, Extras, AP_PRIMES};
use crate::error::{Error, Result};

pub const REQUIRED_COLUMNS: [&str; 9] = [
    "label",
    "conductor",
    "rank",
    "torsion_order",
    "real_period",
    "regulator",
    "tamagawa_product",
    "special_value",
    "sha_order",
];

pub const EXTRA_COLUMNS: [&str; 4] = ["adelic_level", "adelic_index", "adelic_genus", "kodaira_encoded"];

/// Human-readable column schema, printed by the CLI on usage errors.
pub const SCHEMA_HELP: &str = "\
CSV schema (header row required, UTF-8, '.' decimal):
  label,conductor,rank,torsion_order,real_period,regulator,tamagawa_product,special_value,sha_order
  optional group: ap_2,ap_3,...,ap_541 (100 columns, first 100 primes)
  optional group: adelic_level,adelic_index,adelic_genus,kodaira_encoded";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRow {
    /// 1-based data row index (header excluded).
    pub row: usize,
    pub label: String,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct IngestReport {
    pub rows_read: usize,
    pub dropped: Vec<DroppedRow>,
}

struct Layout {
    required: [usize; 9],
    ap: Option<Vec<usize>>,
    extras: Option<[usize; 4]>,
}

fn layout(headers: &csv::StringRecord) -> Result<Layout> {
    let pos: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    let mut required = [0usize; 9];
    for (slot, name) in required.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = *pos.get(name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let ap_names: Vec<String> = AP_PRIMES.iter().map(|p| format!("ap_{p}")).collect();
    let ap_found: Vec<Option<usize>> = ap_names.iter().map(|n| pos.get(n.as_str()).copied()).collect();
    let ap = match ap_found.iter().filter(|p| p.is_some()).count() {
        0 => None,
        n if n == ap_found.len() => Some(ap_found.into_iter().flatten().collect()),
        _ => {
            let missing = ap_names
                .iter()
                .zip(&ap_found)
                .find(|(_, p)| p.is_none())
                .map(|(n, _)| n.clone())
                .unwrap_or_default();
            return Err(Error::MissingColumn(missing));
        }
    };
    let ex_found: Vec<Option<usize>> = EXTRA_COLUMNS.iter().map(|n| pos.get(n).copied()).collect();
    let extras = match ex_found.iter().filter(|p| p.is_some()).count() {
        0 => None,
        4 => Some([
            ex_found[0].unwrap(),
            ex_found[1].unwrap(),
            ex_found[2].unwrap(),
            ex_found[3].unwrap(),
        ]),
        _ => {
            let i = ex_found.iter().position(Option::is_none).unwrap();
            return Err(Error::MissingColumn(EXTRA_COLUMNS[i].to_string()));
        }
    };
    Ok(Layout { required, ap, extras })
}

fn cell<'a>(rec: &'a csv::StringRecord, i: usize) -> &'a str {
    rec.get(i).unwrap_or("").trim()
}

fn parse_req<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, row: usize, column: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let s = cell(rec, i);
    s.parse().map_err(|e: T::Err| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("{e} (`{s}`)"),
    })
}

fn parse_opt<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, row: usize, column: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if cell(rec, i).is_empty() {
        Ok(None)
    } else {
        parse_req(rec, i, row, column).map(Some)
    }
}

fn parse_row(rec: &csv::StringRecord, lay: &Layout, row: usize) -> Result<CurveRecord> {
    let c = &lay.required;
    let label = cell(rec, c[0]).to_string();
    if label.is_empty() {
        return Err(Error::Parse {
            row,
            column: "label".into(),
            message: "empty label".into(),
        });
    }
    let ap_values = lay.ap.as_ref().and_then(|cols| {
        cols.iter()
            .map(|&i| cell(rec, i).parse::<i32>().ok())
            .collect::<Option<Vec<i32>>>()
    });
    let extras = lay.extras.and_then(|cols| {
        let v: Option<Vec<i64>> = cols.iter().map(|&i| cell(rec, i).parse().ok()).collect();
        v.map(|v| Extras {
            adelic_level: v[0],
            adelic_index: v[1],
            adelic_genus: v[2],
            kodaira_encoded: v[3],
        })
    });
    Ok(CurveRecord {
        label,
        conductor: parse_req(rec, c[1], row, "conductor")?,
        rank: parse_req(rec, c[2], row, "rank")?,
        torsion_order: parse_opt(rec, c[3], row, "torsion_order")?,
        real_period: parse_opt(rec, c[4], row, "real_period")?,
        regulator: parse_opt(rec, c[5], row, "regulator")?,
        tamagawa_product: parse_opt(rec, c[6], row, "tamagawa_product")?,
        special_value: parse_opt(rec, c[7], row, "special_value")?,
        sha_order: parse_opt(rec, c[8], row, "sha_order")?,
        ap_values,
        extras,
    })
}

/// Parse CSV from any reader, dropping rows that fail validation at `tol`.
pub fn read_csv<R: Read>(reader: R, tol: f64, source: Source) -> Result<(Dataset, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let lay = layout(rdr.headers()?)?;
    let mut records = Vec::new();
    let mut report = IngestReport::default();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        report.rows_read += 1;
        let parsed = parse_row(&rec, &lay, row)?;
        let v = validate_record(&parsed, tol);
        if v.passed {
            records.push(parsed);
        } else {
            report.dropped.push(DroppedRow {
                row,
                label: parsed.label,
                reasons: v.reasons,
            });
        }
    }
    if !report.dropped.is_empty() {
        warn!(
            "dropped {} of {} rows that failed validation (first: {} - {})",
            report.dropped.len(),
            report.rows_read,
            report.dropped[0].label,
            report.dropped[0].reasons.join("; ")
        );
    }
    Ok((Dataset::new(records, source)?, report))
}

pub fn load_csv_with_tol(path: impl AsRef<Path>, tol: f64) -> Result<(Dataset, IngestReport)> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(
        std::io::BufReader::new(f),
        tol,
        Source::File {
            path: path.display().to_string(),
        },
    )
}

/// Load a curve CSV, validating each row at the default real-data tolerance.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    load_csv_with_tol(path, REAL_DATA_TOL).map(|(ds, _)| ds)
}

fn fmt_f64(x: f64) -> String {
    // Debug formatting is the shortest representation that parses back exactly.
    format!("{x:?}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub(crate) fn write_records<W: Write>(w: W, records: &[CurveRecord]) -> Result<()> {
    let with_ap = records.iter().any(|r| r.ap_values.is_some());
    let with_extras = records.iter().any(|r| r.extras.is_some());
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let mut header: Vec<String> = REQUIRED_COLUMNS.iter().map(|s| s.to_string()).collect();
    if with_ap {
        header.extend(AP_PRIMES.iter().map(|p| format!("ap_{p}")));
    }
    if with_extras {
        header.extend(EXTRA_COLUMNS.iter().map(|s| s.to_string()));
    }
    wtr.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.label.clone(),
            r.conductor.to_string(),
            r.rank.to_string(),
            opt(r.torsion_order),
            r.real_period.map(fmt_f64).unwrap_or_default(),
            r.regulator.map(fmt_f64).unwrap_or_default(),
            opt(r.tamagawa_product),
            r.special_value.map(fmt_f64).unwrap_or_default(),
            opt(r.sha_order),
        ];
        if with_ap {
            match &r.ap_values {
                Some(ap) => row.extend(ap.iter().map(|a| a.to_string())),
                None => row.extend(std::iter::repeat(String::new()).take(AP_PRIMES.len())),
            }
        }
        if with_extras {
            match r.extras {
                Some(e) => row.extend(
                    [e.adelic_level, e.adelic_index, e.adelic_genus, e.kodaira_encoded].map(|v| v.to_string()),
                ),
                None => row.extend(std::iter::repeat(String::new()).take(4)),
            }
        }
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Metadata written next to a saved dataset as `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub source: Source,
    pub seed: Option<u64>,
    pub schema_version: u32,
    pub fingerprint: Fingerprint,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Write the dataset as CSV plus its metadata sidecar.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(f), &ds.records)?;
    let meta = Sidecar {
        source: ds.source.clone(),
        seed: ds.source.seed(),
        schema_version: SCHEMA_VERSION,
        fingerprint: ds.fingerprint(),
    };
    let side = sidecar_path(path);
    std::fs::write(&side, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&side, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "label,conductor,rank,torsion_order,real_period,regulator,tamagawa_product,special_value,sha_order\n";

    fn read(s: &str) -> Result<(Dataset, IngestReport)> {
        read_csv(s.as_bytes(), 1e-6, Source::Memory)
    }

    #[test]
    fn minimal_row() {
        let (ds, rep) = read(&format!("{HEADER}x1,11,0,1,1.0,1.0,1,4.0,4\n")).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(rep.rows_read, 1);
        assert_eq!(ds.records[0].sha_order, Some(4));
    }

    #[test]
    fn missing_column() {
        let err = read("label,conductor,rank\nx,1,0\n").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "torsion_order"));
    }

    #[test]
    fn parse_error_reports_row_and_column() {
        let err = read(&format!("{HEADER}a,11,0,1,1.0,1.0,1,4.0,4\nb,eleven,0,1,1,1,1,1,1\n")).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "conductor");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn invariant_violations_dropped_and_counted() {
        let csv = format!(
            "{HEADER}ok,11,0,1,1.0,1.0,1,4.0,4\nbadreg,11,0,1,1.0,2.0,1,8.0,4\nnonsq,11,0,1,1.0,1.0,1,3.0,3\n"
        );
        let (ds, rep) = read(&csv).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(rep.dropped.len(), 2);
        assert_eq!(rep.dropped[0].label, "badreg");
        assert!(rep.dropped[0].reasons[0].contains("regulator"));
    }

    #[test]
    fn partial_ap_group_is_missing_column() {
        let err = read("label,conductor,rank,torsion_order,real_period,regulator,tamagawa_product,special_value,sha_order,ap_2\n").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "ap_3"));
    }

    #[test]
    fn empty_special_value_is_absent() {
        let (ds, _) = read(&format!("{HEADER}e29,1,29,1,3.5e-15,4.3e35,10725120,,\n")).unwrap();
        assert_eq!(ds.records[0].special_value, None);
        assert_eq!(ds.records[0].sha_order, None);
    }
}
