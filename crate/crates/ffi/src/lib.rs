//! C ABI over the `shaml` core.
//!
//! Datasets and models are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`ShamlStatus`]; on failure the message is available from
//! [`shaml_last_error`] on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use shaml::curvedata::{compute_sha_from_bsd, load_csv_with_tol, CurveRecord, Dataset};
use shaml::featureng::{prepare, FeatureSpec, Target};
use shaml::metrics;
use shaml::models::{gbm_fit, GbmTask, ModelParams, TrainConfig, TrainedModel};
use shaml::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShamlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Numeric = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShamlTask {
    /// Classify trivial (|Sha| = 1) against non-trivial.
    Classify = 0,
    /// Regress sqrt|Sha|.
    Regress = 1,
}

/// Opaque dataset handle.
pub struct ShamlDataset(Dataset);

/// Opaque trained-model handle.
pub struct ShamlModel(TrainedModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn status_of(e: &Error) -> ShamlStatus {
    match e {
        Error::Io { .. } | Error::Network(_) => ShamlStatus::Io,
        Error::Parse { .. } | Error::Csv(_) | Error::Json(_) | Error::MissingColumn(_) | Error::SchemaDrift(_) => {
            ShamlStatus::Parse
        }
        Error::InvariantViolation { .. }
        | Error::DuplicateLabel(_)
        | Error::MissingFeature { .. }
        | Error::NonPositiveFeature { .. }
        | Error::NonPositiveEntry { .. }
        | Error::UnknownClass { .. } => ShamlStatus::Validation,
        Error::RankDeficient { .. } | Error::NoConvergence { .. } | Error::NonFinite(_) | Error::NotSymmetric(_) => {
            ShamlStatus::Numeric
        }
        _ => ShamlStatus::InvalidArgument,
    }
}

/// Run `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (ShamlStatus, String)>) -> ShamlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ShamlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ShamlStatus::Panic
        }
    }
}

fn lift(e: Error) -> (ShamlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (ShamlStatus, String) {
    (ShamlStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (ShamlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (ShamlStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `shaml_*` call on the same thread.
#[no_mangle]
pub extern "C" fn shaml_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Load a curve CSV, dropping rows whose BSD residual exceeds `tol`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shaml_dataset_load_csv(path: *const c_char, tol: f64, out: *mut *mut ShamlDataset) -> ShamlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = c_str(path, "path")?;
        if !(tol >= 0.0) {
            return Err((ShamlStatus::InvalidArgument, format!("tolerance must be >= 0, got {tol}")));
        }
        let (ds, _) = load_csv_with_tol(path, tol).map_err(lift)?;
        *out = Box::into_raw(Box::new(ShamlDataset(ds)));
        Ok(())
    })
}

/// Number of curves; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle from [`shaml_dataset_load_csv`].
#[no_mangle]
pub unsafe extern "C" fn shaml_dataset_len(ds: *const ShamlDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shaml_dataset_free(ds: *mut ShamlDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Unrounded |Sha| from the BSD formula.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shaml_compute_sha(
    torsion: u32,
    special_value: f64,
    real_period: f64,
    regulator: f64,
    tamagawa: u64,
    out: *mut f64,
) -> ShamlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let rec = CurveRecord::bsd("ffi", 1, 0, torsion, real_period, regulator, tamagawa, special_value, None);
        *out = compute_sha_from_bsd(&rec).map_err(lift)?;
        Ok(())
    })
}

/// Round a sqrt|Sha| prediction to an integer >= 1.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shaml_round_sqrt_sha(prediction: f64, out: *mut u64) -> ShamlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = metrics::round_sqrt_sha(prediction).map_err(lift)?;
        Ok(())
    })
}

/// Binary MCC of two 0/1 label arrays of length `n`.
///
/// # Safety
/// `pred` and `truth` must point to `n` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shaml_mcc(pred: *const u8, truth: *const u8, n: usize, out: *mut f64) -> ShamlStatus {
    guard(|| {
        if pred.is_null() || truth.is_null() || out.is_null() {
            return Err(null("pred/truth/out"));
        }
        let p: Vec<bool> = std::slice::from_raw_parts(pred, n).iter().map(|&b| b != 0).collect();
        let t: Vec<bool> = std::slice::from_raw_parts(truth, n).iter().map(|&b| b != 0).collect();
        *out = metrics::mcc(&p, &t).map_err(lift)?;
        Ok(())
    })
}

/// Fit a boosted-tree model on the five BSD features with default settings.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shaml_gbm_fit(
    ds: *const ShamlDataset,
    task: ShamlTask,
    log_features: bool,
    seed: u64,
    out: *mut *mut ShamlModel,
) -> ShamlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let ds = ds.as_ref().ok_or_else(|| null("ds"))?;
        let (target, gtask) = match task {
            ShamlTask::Classify => (Target::TrivialSha, GbmTask::Classify),
            ShamlTask::Regress => (Target::SqrtSha, GbmTask::Regress),
        };
        let spec = FeatureSpec::bsd(log_features, false);
        let cfg = TrainConfig::with_seed(seed);
        let m = prepare(&ds.0, &spec, &target).map_err(lift)?;
        let model = gbm_fit(&m, &cfg, gtask).map_err(lift)?;
        let trained = TrainedModel::new(spec, target, None, cfg, ModelParams::Gbm(model));
        *out = Box::into_raw(Box::new(ShamlModel(trained)));
        Ok(())
    })
}

/// Predict every curve of `ds` into `out[0..len)`. `len` must equal the
/// dataset length. Classifiers yield the class index (1 = trivial),
/// regressors the raw sqrt|Sha| estimate.
///
/// # Safety
/// Handles must be live; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn shaml_model_predict(
    model: *const ShamlModel,
    ds: *const ShamlDataset,
    out: *mut f64,
    len: usize,
) -> ShamlStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let ds = ds.as_ref().ok_or_else(|| null("ds"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != ds.0.len() {
            return Err((
                ShamlStatus::BufferTooSmall,
                format!("output has {len} slots, dataset has {} curves", ds.0.len()),
            ));
        }
        let pred = model.0.predict_dataset(&ds.0).map_err(lift)?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&pred);
        Ok(())
    })
}

/// Serialize a model to JSON. Release the string with [`shaml_string_free`].
///
/// # Safety
/// `model` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shaml_model_to_json(model: *const ShamlModel, out: *mut *mut c_char) -> ShamlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let s = model.0.to_json().map_err(lift)?;
        *out = CString::new(s)
            .map_err(|_| (ShamlStatus::Parse, "model JSON contains NUL".to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shaml_model_from_json(json: *const c_char, out: *mut *mut ShamlModel) -> ShamlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = c_str(json, "json")?;
        let m = TrainedModel::from_json(s).map_err(lift)?;
        *out = Box::into_raw(Box::new(ShamlModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shaml_model_free(model: *mut ShamlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shaml_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
