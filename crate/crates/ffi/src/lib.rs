//! C ABI over trained checkpoints and the evaluation metrics.
//!
//! Fallible functions return a [`UqtscStatus`]. On failure the message is
//! stored per thread and read back with [`uqtsc_last_error`]. Output pointers
//! are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use uqtsc::arch::{load_checkpoint, ArchError, Network};
use uqtsc::hpo::{hyperband_schedule, IterationMode};
use uqtsc::metrics::{
    ece, f1_and_accuracy, predictive_entropy, predictive_posterior, select, Decision, EceMode, MetricsError,
};
use uqtsc::nn::Tensor;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UqtscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Checkpoint = 4,
    ShapeMismatch = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UqtscScores {
    pub f1_cl0: f64,
    pub f1_cl1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
}

/// A loaded checkpoint. Create with `uqtsc_model_load`, release with
/// `uqtsc_model_free`.
pub struct UqtscModel {
    net: Network,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (UqtscStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UqtscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UqtscStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            UqtscStatus::Panic
        }
    }
}

fn invalid(msg: impl ToString) -> Failure {
    (UqtscStatus::InvalidArgument, msg.to_string())
}

fn arch_failure(e: ArchError) -> Failure {
    let status = match &e {
        ArchError::Io { .. } => UqtscStatus::Io,
        ArchError::Checkpoint(_) | ArchError::Kv(_) => UqtscStatus::Checkpoint,
        ArchError::InputMismatch { .. } => UqtscStatus::ShapeMismatch,
        _ => UqtscStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn metrics_failure(e: MetricsError) -> Failure {
    match e {
        MetricsError::Arch(e) => arch_failure(e),
        e => invalid(e),
    }
}

unsafe fn input<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if ptr.is_null() {
        return Err((UqtscStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if ptr.is_null() {
        return Err((UqtscStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn model<'a>(ptr: *const UqtscModel) -> Result<&'a UqtscModel, Failure> {
    ptr.as_ref().ok_or((UqtscStatus::NullPointer, "model is null".into()))
}

fn pairs(probs: &[f64]) -> Vec<[f64; 2]> {
    probs.chunks(2).map(|p| [p[0], p[1]]).collect()
}

fn binary(labels: &[u8], what: &str) -> Result<(), Failure> {
    match labels.iter().find(|&&l| l > 1) {
        Some(l) => Err(invalid(format!("{what} must be 0 or 1, got {l}"))),
        None => Ok(()),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uqtsc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn uqtsc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn uqtsc_model_load(path: *const c_char, out: *mut *mut UqtscModel) -> UqtscStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err((UqtscStatus::NullPointer, "path and out must not be null".into()));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not UTF-8"))?;
        let net = load_checkpoint(Path::new(path)).map_err(arch_failure)?;
        *out = Box::into_raw(Box::new(UqtscModel { net }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `uqtsc_model_load` and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn uqtsc_model_free(model: *mut UqtscModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `channels` and `length` writable.
#[no_mangle]
pub unsafe extern "C" fn uqtsc_model_input_shape(
    model: *const UqtscModel,
    channels: *mut usize,
    length: *mut usize,
) -> UqtscStatus {
    guard(|| {
        let m = self::model(model)?;
        let c = output(channels, 1, "channels")?;
        let l = output(length, 1, "length")?;
        c[0] = m.net.input.channels;
        l[0] = m.net.input.length;
        Ok(())
    })
}

/// Monte Carlo predictive posterior over `samples` stochastic passes.
/// `x` holds `batch * channels * length` values in `[batch][channel][time]`
/// order. Writes `batch * 2` mean probabilities and, when `entropy_out` is
/// not null, `batch` predictive entropies.
///
/// # Safety
/// `model` must be a live handle and every pointer must cover the lengths
/// above.
#[no_mangle]
pub unsafe extern "C" fn uqtsc_model_predict(
    model: *const UqtscModel,
    x: *const f64,
    batch: usize,
    samples: usize,
    seed: u64,
    mean_out: *mut f64,
    entropy_out: *mut f64,
) -> UqtscStatus {
    guard(|| {
        let m = self::model(model)?;
        if batch == 0 {
            return Err(invalid("batch must be at least 1"));
        }
        let shape = vec![batch, m.net.input.channels, m.net.input.length];
        let x = input(x, shape.iter().product(), "x")?;
        let mean = output(mean_out, 2 * batch, "mean_out")?;
        let x = Tensor::new(shape, x.to_vec()).map_err(invalid)?;
        let dists = predictive_posterior(&m.net, &x, samples, seed, 1).map_err(metrics_failure)?;
        let entropies =
            dists.iter().map(|d| predictive_entropy(&d.mean)).collect::<Result<Vec<_>, _>>().map_err(metrics_failure)?;
        for (slot, d) in mean.chunks_mut(2).zip(&dists) {
            slot.copy_from_slice(&d.mean);
        }
        if !entropy_out.is_null() {
            output(entropy_out, batch, "entropy_out")?.copy_from_slice(&entropies);
        }
        Ok(())
    })
}

/// Natural-log entropy of a probability vector of length `n`.
///
/// # Safety
/// `probs` must hold `n` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn uqtsc_entropy(probs: *const f64, n: usize, out: *mut f64) -> UqtscStatus {
    guard(|| {
        let h = predictive_entropy(input(probs, n, "probs")?).map_err(invalid)?;
        output(out, 1, "out")?[0] = h;
        Ok(())
    })
}

/// Expected calibration error over `n` binary predictions. `probs` holds
/// `n * 2` class probabilities. Confidence binning unless `positive_class`.
///
/// # Safety
/// `probs` must hold `2n` values, `labels` `n` values, and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn uqtsc_ece(
    probs: *const f64,
    labels: *const u8,
    n: usize,
    bins: usize,
    positive_class: bool,
    out: *mut f64,
) -> UqtscStatus {
    guard(|| {
        let probs = pairs(input(probs, 2 * n, "probs")?);
        let labels = input(labels, n, "labels")?;
        binary(labels, "labels")?;
        let mode = if positive_class { EceMode::PositiveClass } else { EceMode::Confidence };
        let (e, _) = ece(&probs, labels, bins, mode).map_err(invalid)?;
        output(out, 1, "out")?[0] = e;
        Ok(())
    })
}

/// # Safety
/// `preds` and `labels` must hold `n` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn uqtsc_f1(preds: *const u8, labels: *const u8, n: usize, out: *mut UqtscScores) -> UqtscStatus {
    guard(|| {
        let preds = input(preds, n, "preds")?;
        let labels = input(labels, n, "labels")?;
        binary(preds, "preds")?;
        binary(labels, "labels")?;
        let s = f1_and_accuracy(preds, labels).map_err(invalid)?;
        output(out, 1, "out")?[0] =
            UqtscScores { f1_cl0: s.f1[0], f1_cl1: s.f1[1], weighted_f1: s.weighted_f1, accuracy: s.accuracy };
        Ok(())
    })
}

/// True when both class F1 scores reach 0.9 and mean entropy is at most 0.1.
#[no_mangle]
pub extern "C" fn uqtsc_select(f1_cl0: f64, f1_cl1: f64, mean_entropy: f64) -> bool {
    select(f1_cl0, f1_cl1, mean_entropy) == Decision::Select
}

/// Number of full windows of length `window` at stride `step`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uqtsc_window_count(len: usize, window: usize, step: usize, out: *mut usize) -> UqtscStatus {
    guard(|| {
        if window == 0 || step == 0 {
            return Err(invalid("window and step must be positive"));
        }
        output(out, 1, "out")?[0] = uqtsc::data::window_count(len, window, step);
        Ok(())
    })
}

/// Epochs charged by `iterations` Hyperband iterations.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uqtsc_hyperband_total_epochs(
    min_budget: usize,
    max_budget: usize,
    eta: usize,
    iterations: usize,
    single_bracket: bool,
    out: *mut usize,
) -> UqtscStatus {
    guard(|| {
        let schedule = hyperband_schedule(min_budget, max_budget, eta).map_err(invalid)?;
        let mode = if single_bracket { IterationMode::SingleBracket } else { IterationMode::FullSweep };
        output(out, 1, "out")?[0] = schedule.total_epochs(iterations, mode);
        Ok(())
    })
}
