//! C ABI over the sqnkit toolkit: opaque handles, status codes, and a flat
//! options struct so other languages can load datasets, run the solvers,
//! and walk the resulting traces.
//!
//! Conventions:
//! - Every fallible call returns [`SqnStatus`]; `SQN_STATUS_OK` is 0.
//! - On failure, [`sqn_last_error_message`] returns a thread-local message
//!   valid until the next failing call on the same thread.
//! - Handles created here must be released with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use sqnkit::oracle::SamplingPolicy;
use sqnkit::problems::{
    generate_synthetic, load_sparse_dataset, write_sparse_dataset, LabeledDataset,
    SigmoidSvmProblem,
};
use sqnkit::solvers::{
    sdlbfgs_vr_run as run_sdlbfgs_vr, sqn_run as run_sqn, GammaMode, RunTrace, SolverConfig,
    StepSchedule, SvmEvaluator, VrConfig, VrCurvatureSource,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqnStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    NumericError = 5,
    IndexError = 6,
    Utf8Error = 7,
    InternalError = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_for(err: &sqnkit::Error) -> SqnStatus {
    use sqnkit::Error::*;
    match err {
        Dimension { .. } | Argument(_) | Sampling(_) | Schedule { .. } | Config(_) => {
            SqnStatus::InvalidArgument
        }
        NonFinite { .. } | DegenerateStep => SqnStatus::NumericError,
        IndexOutOfRange { .. } => SqnStatus::IndexError,
        Parse { .. } | Label { .. } => SqnStatus::ParseError,
        Io(_) | Data { .. } => SqnStatus::IoError,
    }
}

fn fail(err: sqnkit::Error) -> SqnStatus {
    let status = status_for(&err);
    set_error(&err.to_string());
    status
}

/// ABI version; bump on any breaking change to this header.
#[no_mangle]
pub extern "C" fn sqn_abi_version() -> u32 {
    1
}

/// Message for the most recent failure on this thread. Never null; empty
/// when nothing failed yet. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn sqn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Opaque labeled dataset handle.
pub struct SqnDataset {
    inner: LabeledDataset,
}

unsafe fn path_from(ptr_: *const c_char) -> Result<std::path::PathBuf, SqnStatus> {
    if ptr_.is_null() {
        set_error("null path");
        return Err(SqnStatus::NullArgument);
    }
    match CStr::from_ptr(ptr_).to_str() {
        Ok(s) => Ok(Path::new(s).to_path_buf()),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(SqnStatus::Utf8Error)
        }
    }
}

/// Loads a dataset from the sparse text format.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sqn_dataset_load(
    path: *const c_char,
    out: *mut *mut SqnDataset,
) -> SqnStatus {
    if out.is_null() {
        set_error("null output pointer");
        return SqnStatus::NullArgument;
    }
    let path = match path_from(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match load_sparse_dataset(&path) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(SqnDataset { inner }));
            SqnStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Generates a synthetic planted-model dataset (labels from a hidden
/// hyperplane, `round(density * n)` nonzeros per sample).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sqn_dataset_generate(
    seed: u64,
    n: usize,
    count: usize,
    density: f64,
    out: *mut *mut SqnDataset,
) -> SqnStatus {
    if out.is_null() {
        set_error("null output pointer");
        return SqnStatus::NullArgument;
    }
    match generate_synthetic(n, count, density, seed) {
        Ok((inner, _xbar)) => {
            *out = Box::into_raw(Box::new(SqnDataset { inner }));
            SqnStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Writes a dataset in the sparse text format.
///
/// # Safety
/// `dataset` must come from this library; `path` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sqn_dataset_save(
    dataset: *const SqnDataset,
    path: *const c_char,
) -> SqnStatus {
    let Some(dataset) = dataset.as_ref() else {
        set_error("null dataset");
        return SqnStatus::NullArgument;
    };
    let path = match path_from(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match write_sparse_dataset(&path, &dataset.inner) {
        Ok(()) => SqnStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_dataset_len(dataset: *const SqnDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.len())
}

/// Feature dimension, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_dataset_dim(dataset: *const SqnDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.dim())
}

/// Releases a dataset handle (null is a no-op).
///
/// # Safety
/// `dataset` must be null or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_dataset_free(dataset: *mut SqnDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Solver family.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqnAlgorithm {
    Sgd = 0,
    Sdlbfgs = 1,
    Svrg = 2,
    SdlbfgsVr = 3,
}

/// Step-size schedule kind.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqnStepKind {
    /// `alpha_k = base / k`.
    Diminishing = 0,
    /// `alpha_k = base`.
    Constant = 1,
}

/// Flat solver options consumed by [`sqn_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SqnSolverOptions {
    pub algorithm: SqnAlgorithm,
    pub seed: u64,
    pub batch_size: usize,
    /// Curvature-pair memory p (ignored by sgd/svrg).
    pub memory: usize,
    /// Scaling floor delta.
    pub delta: f64,
    pub step_kind: SqnStepKind,
    pub step_base: f64,
    /// Iterations for sgd/sdlbfgs.
    pub max_iters: u64,
    /// Outer epochs for the variance-reduced kinds.
    pub epochs: u64,
    /// Inner steps per epoch for the variance-reduced kinds.
    pub inner_iters: u64,
    pub eval_every: u64,
    /// l2 regularization weight.
    pub lambda: f64,
}

/// Fills `out` with the benchmark defaults (sdlbfgs, p=10, m=100,
/// alpha_k = 10/k, 1000 iterations, lambda = 1e-4).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sqn_solver_options_default(out: *mut SqnSolverOptions) -> SqnStatus {
    if out.is_null() {
        set_error("null options pointer");
        return SqnStatus::NullArgument;
    }
    *out = SqnSolverOptions {
        algorithm: SqnAlgorithm::Sdlbfgs,
        seed: 0,
        batch_size: 100,
        memory: 10,
        delta: 0.01,
        step_kind: SqnStepKind::Diminishing,
        step_base: 10.0,
        max_iters: 1000,
        epochs: 10,
        inner_iters: 100,
        eval_every: 10,
        lambda: 1e-4,
    };
    SqnStatus::Ok
}

/// Opaque run-trace handle.
pub struct SqnTrace {
    inner: RunTrace,
}

/// One evaluation record, mirroring a trace CSV row.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SqnTraceRecord {
    pub iteration: u64,
    pub step_size: f64,
    pub sng: f64,
    pub objective: f64,
    pub accuracy: f64,
    pub sfo_total: u64,
    pub damped_step: i32,
    pub negative_curvature: i32,
}

fn solver_config(opts: &SqnSolverOptions) -> SolverConfig {
    let schedule = match opts.step_kind {
        SqnStepKind::Diminishing => StepSchedule::Diminishing {
            base: opts.step_base,
        },
        SqnStepKind::Constant => StepSchedule::Constant {
            base: opts.step_base,
        },
    };
    let (gamma_mode, memory) = match opts.algorithm {
        SqnAlgorithm::Sgd | SqnAlgorithm::Svrg => (GammaMode::Fixed { gamma: 1.0 }, 0),
        SqnAlgorithm::Sdlbfgs | SqnAlgorithm::SdlbfgsVr => (GammaMode::Adaptive, opts.memory),
    };
    let vr = matches!(opts.algorithm, SqnAlgorithm::Svrg | SqnAlgorithm::SdlbfgsVr).then(|| {
        VrConfig {
            epochs: opts.epochs,
            inner_iters: opts.inner_iters,
            y_mode: VrCurvatureSource::ReuseVr,
        }
    });
    SolverConfig {
        batch_size: opts.batch_size,
        memory,
        delta: opts.delta,
        schedule,
        max_iters: opts.max_iters.max(1),
        seed: opts.seed,
        eval_every: opts.eval_every,
        sampling: SamplingPolicy::WithoutReplacement,
        initial_gamma: 1.0,
        gamma_mode,
        initial_iterate: None,
        vr,
    }
}

/// Trains on `train`, evaluating SNG/accuracy on `test`, and returns a
/// trace handle.
///
/// # Safety
/// All pointers must be valid; dataset handles must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_run(
    train: *const SqnDataset,
    test: *const SqnDataset,
    options: *const SqnSolverOptions,
    out: *mut *mut SqnTrace,
) -> SqnStatus {
    let (Some(train), Some(test), Some(options)) = (train.as_ref(), test.as_ref(), options.as_ref())
    else {
        set_error("null argument to sqn_run");
        return SqnStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null output pointer");
        return SqnStatus::NullArgument;
    }
    let problem = match SigmoidSvmProblem::new(train.inner.clone(), options.lambda) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let config = solver_config(options);
    let evaluator = SvmEvaluator {
        problem: &problem,
        testset: &test.inner,
    };
    let result = match options.algorithm {
        SqnAlgorithm::Sgd | SqnAlgorithm::Sdlbfgs => run_sqn(&problem, &config, &evaluator),
        SqnAlgorithm::Svrg | SqnAlgorithm::SdlbfgsVr => {
            run_sdlbfgs_vr(&problem, &config, &evaluator)
        }
    };
    match result {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(SqnTrace { inner }));
            SqnStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of evaluation records in the trace.
///
/// # Safety
/// `trace` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_trace_len(trace: *const SqnTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.records.len())
}

/// Copies record `index` into `out`.
///
/// # Safety
/// `trace` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sqn_trace_record(
    trace: *const SqnTrace,
    index: usize,
    out: *mut SqnTraceRecord,
) -> SqnStatus {
    let Some(trace) = trace.as_ref() else {
        set_error("null trace");
        return SqnStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null output pointer");
        return SqnStatus::NullArgument;
    }
    let Some(r) = trace.inner.records.get(index) else {
        set_error("record index out of range");
        return SqnStatus::IndexError;
    };
    *out = SqnTraceRecord {
        iteration: r.iteration,
        step_size: r.step_size,
        sng: r.sng,
        objective: r.objective,
        accuracy: r.accuracy,
        sfo_total: r.sfo_total,
        damped_step: r.damped_step.into(),
        negative_curvature: r.negative_curvature.into(),
    };
    SqnStatus::Ok
}

/// Total component-gradient evaluations spent by the run.
///
/// # Safety
/// `trace` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_trace_sfo_total(trace: *const SqnTrace) -> u64 {
    trace.as_ref().map_or(0, |t| t.inner.sfo.total_calls())
}

/// Number of damped curvature updates (theta < 1).
///
/// # Safety
/// `trace` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_trace_damped_steps(trace: *const SqnTrace) -> u64 {
    trace.as_ref().map_or(0, |t| t.inner.damped_steps)
}

/// Number of steps whose raw curvature s'y was negative.
///
/// # Safety
/// `trace` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_trace_negative_curvature_steps(trace: *const SqnTrace) -> u64 {
    trace.as_ref().map_or(0, |t| t.inner.negative_curvature_steps)
}

/// 1 when the run tripped the divergence sentinel.
///
/// # Safety
/// `trace` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_trace_diverged(trace: *const SqnTrace) -> i32 {
    trace.as_ref().map_or(0, |t| i32::from(t.inner.diverged()))
}

/// Dimension of the final iterate.
///
/// # Safety
/// `trace` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_trace_solution_dim(trace: *const SqnTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.final_iterate.len())
}

/// Copies the final iterate into `out` (length `len` must match).
///
/// # Safety
/// `trace` must be valid; `out` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sqn_trace_solution(
    trace: *const SqnTrace,
    out: *mut f64,
    len: usize,
) -> SqnStatus {
    let Some(trace) = trace.as_ref() else {
        set_error("null trace");
        return SqnStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null output pointer");
        return SqnStatus::NullArgument;
    }
    let x = &trace.inner.final_iterate;
    if x.len() != len {
        set_error("solution length mismatch");
        return SqnStatus::InvalidArgument;
    }
    ptr::copy_nonoverlapping(x.as_slice().as_ptr(), out, len);
    SqnStatus::Ok
}

/// Releases a trace handle (null is a no-op).
///
/// # Safety
/// `trace` must be null or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sqn_trace_free(trace: *mut SqnTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
