//! C interface to calibench: load canonical datasets, load trained models
//! and evaluate them.
//!
//! Every fallible call returns a `CbStatus`. On failure the message is kept
//! per thread and can be read with `cb_last_error`. Handles are opaque and
//! must be released with the matching `*_free` function. Panics never cross
//! the boundary; they surface as `CB_STATUS_PANIC`.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the stated length; strings
//! must be NUL-terminated. Handles must come from this library and must not
//! be used after they are freed.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use calibench::dataset::{load_canonical, TimeSeriesDataset};
use calibench::eval::footprint;
use calibench::{Error, Matrix, MethodKind, TrainedModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Dimension = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbMethod {
    Mlr = 0,
    Mlp = 1,
    Svr = 2,
    Gpr = 3,
    Esn = 4,
}

impl From<MethodKind> for CbMethod {
    fn from(k: MethodKind) -> Self {
        match k {
            MethodKind::Mlr => CbMethod::Mlr,
            MethodKind::Mlp => CbMethod::Mlp,
            MethodKind::Svr => CbMethod::Svr,
            MethodKind::Gpr => CbMethod::Gpr,
            MethodKind::Esn => CbMethod::Esn,
        }
    }
}

/// Storage and per-prediction cost of a model.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CbFootprint {
    /// Learned numbers kept for prediction.
    pub stored: usize,
    /// Multiply-accumulates per prediction.
    pub macs: usize,
    /// tanh / exp / sqrt evaluations per prediction.
    pub nonlinear: usize,
}

/// Opaque dataset handle.
pub struct CbDataset {
    inner: TimeSeriesDataset,
}

/// Opaque trained-model handle.
pub struct CbModel {
    inner: TrainedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> CbStatus {
    match e {
        Error::Io { .. } => CbStatus::Io,
        Error::Parse { .. } | Error::Structure(_) | Error::Schema(_) => CbStatus::Parse,
        Error::Dimension { .. } => CbStatus::Dimension,
        Error::InvalidParameter(_) | Error::Config(_) | Error::Empty(_) => CbStatus::InvalidArgument,
        Error::Singular { .. } | Error::Numerical(_) | Error::NotConverged { .. } => CbStatus::Numerical,
    }
}

struct Fail(CbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CbStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {m}"));
            CbStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(CbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CbStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err(Fail(CbStatus::BufferTooSmall, format!("{what} holds {len} values, {need} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to fit) and returns the full message length plus one. Pass a
/// null `buf` to query the size.
#[no_mangle]
pub unsafe extern "C" fn cb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Loads a dataset written by `calibench ingest` (CSV plus its metadata file).
#[no_mangle]
pub unsafe extern "C" fn cb_dataset_load(path: *const c_char, out: *mut *mut CbDataset) -> CbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let ds = load_canonical(Path::new(path))?;
        *out = Box::into_raw(Box::new(CbDataset { inner: ds }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cb_dataset_free(ds: *mut CbDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of time steps; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cb_dataset_rows(ds: *const CbDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.len())
}

#[no_mangle]
pub unsafe extern "C" fn cb_dataset_channels(ds: *const CbDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n_channels())
}

/// Seconds between samples; NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cb_dataset_sampling_period(ds: *const CbDataset) -> f64 {
    ds.as_ref().map_or(f64::NAN, |d| d.inner.sampling_period)
}

/// Row-major `rows x channels` sensor readings; missing values are NaN.
#[no_mangle]
pub unsafe extern "C" fn cb_dataset_copy_channels(ds: *const CbDataset, out: *mut f64, len: usize) -> CbStatus {
    guard(|| {
        let d = &ds.as_ref().ok_or_else(|| null("dataset"))?.inner;
        let src = d.channels().as_slice();
        out_slice(out, len, src.len(), "out")?.copy_from_slice(src);
        Ok(())
    })
}

/// Reference series of the named target, one value per row (NaN if missing).
#[no_mangle]
pub unsafe extern "C" fn cb_dataset_copy_target(
    ds: *const CbDataset,
    name: *const c_char,
    out: *mut f64,
    len: usize,
) -> CbStatus {
    guard(|| {
        let d = &ds.as_ref().ok_or_else(|| null("dataset"))?.inner;
        let t = d.target(str_arg(name, "name")?)?;
        out_slice(out, len, t.values.len(), "out")?.copy_from_slice(&t.values);
        Ok(())
    })
}

/// Parses a model from its text serialization (`model.txt` contents).
#[no_mangle]
pub unsafe extern "C" fn cb_model_from_text(text: *const c_char, out: *mut *mut CbModel) -> CbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = TrainedModel::from_text(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(CbModel { inner: m }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cb_model_load(path: *const c_char, out: *mut *mut CbModel) -> CbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| Fail(CbStatus::Io, format!("{path}: {e}")))?;
        let m = TrainedModel::from_text(&text)?;
        *out = Box::into_raw(Box::new(CbModel { inner: m }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cb_model_free(m: *mut CbModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cb_model_method(m: *const CbModel, out: *mut CbMethod) -> CbStatus {
    guard(|| {
        let m = &m.as_ref().ok_or_else(|| null("model"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = m.kind().into();
        Ok(())
    })
}

/// Feature count per input row; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cb_model_input_dim(m: *const CbModel) -> usize {
    m.as_ref().map_or(0, |m| m.inner.input_dim())
}

/// Predicts one value per row of the row-major `rows x cols` input. Inputs
/// and outputs are in the model's standardized space; the winner's
/// `preprocessing.txt` holds the scaling. Reservoir models read the rows as
/// one sequence starting from rest.
#[no_mangle]
pub unsafe extern "C" fn cb_model_predict(
    m: *const CbModel,
    x: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
    out_len: usize,
) -> CbStatus {
    guard(|| {
        let m = &m.as_ref().ok_or_else(|| null("model"))?.inner;
        if x.is_null() && rows * cols > 0 {
            return Err(null("x"));
        }
        let data = if rows * cols == 0 { Vec::new() } else { std::slice::from_raw_parts(x, rows * cols).to_vec() };
        let xm = Matrix::from_vec(rows, cols, data)?;
        let pred = m.predict(&xm)?;
        if rows == 0 {
            return Ok(());
        }
        out_slice(out, out_len, pred.len(), "out")?.copy_from_slice(&pred);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cb_model_footprint(m: *const CbModel, out: *mut CbFootprint) -> CbStatus {
    guard(|| {
        let m = &m.as_ref().ok_or_else(|| null("model"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let f = footprint(m);
        *out = CbFootprint { stored: f.stored, macs: f.macs, nonlinear: f.nonlinear };
        Ok(())
    })
}
