//! Curve records, datasets, ingestion and the synthetic generator.

pub mod bsd;
pub mod csv_io;
pub mod dataset;
pub mod lmfdb;
pub mod record;
pub mod synth;

pub use bsd::{compute_sha_from_bsd, validate_record, ValidationReport, REAL_DATA_TOL, SYNTHETIC_TOL};
pub use csv_io::{load_csv, load_csv_with_tol, read_csv, save_csv, IngestReport};
pub use dataset::{balanced_subset, train_test_split, ClassField, Dataset, Fingerprint, Source, SplitSpec};
pub use lmfdb::{fetch_lmfdb, LmfdbClient, LmfdbQuery};
pub use record::{CurveRecord, Extras, Feature, AP_PRIMES, BSD_FEATURES};
pub use synth::{synthesize_dataset, ClassSpec};
