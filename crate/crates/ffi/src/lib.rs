//! C interface to the fairclust solver.
//!
//! Every fallible function returns an [`FcStatus`]. On failure a message is
//! kept per thread and can be read with [`fc_last_error_message`]. Handles
//! returned through out-pointers are owned by the caller and released with
//! the matching `*_free` function. Matrices are dense and row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fairclust::data::{kmeanspp_seed, knn_affinity};
use fairclust::{
    solve, ClusteringProblem, DemographicPartition, FairError, Matrix, Metric, SolveResult, SolverConfig,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidConfig = 4,
    InvalidPartition = 5,
    InvalidGraph = 6,
    /// Non-finite energy or an update that left the simplex.
    Numerical = 7,
    BufferTooSmall = 8,
    Panic = 9,
    Internal = 10,
}

/// Values accepted in [`FcProblemDesc::objective`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcObjective {
    Kmeans = 0,
    Kmedian = 1,
    Ncut = 2,
}

/// Values accepted in [`FcProblemDesc::metric`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcMetric {
    Euclidean = 0,
    Manhattan = 1,
    Chebyshev = 2,
}

/// Input description for [`fc_problem_new`]. The arrays are copied.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FcProblemDesc {
    /// One of `FcObjective`.
    pub objective: u32,
    /// One of `FcMetric`; used by K-median only.
    pub metric: u32,
    /// `n_points * n_features` values, row-major.
    pub features: *const f64,
    pub n_points: usize,
    pub n_features: usize,
    pub n_clusters: usize,
    /// Group index of every point, each below `n_groups`.
    pub groups: *const u32,
    pub n_groups: usize,
    /// `n_groups` target proportions, or NULL for the dataset's own.
    pub targets: *const f64,
    /// Neighbors per point of the Ncut affinity graph.
    pub knn: usize,
}

/// Solver settings; start from [`fc_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FcConfig {
    pub lambda: f64,
    pub lipschitz_l: f64,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub rng_seed: u64,
    pub marginal_floor: f64,
    pub reinit_each_outer: bool,
}

impl From<&SolverConfig> for FcConfig {
    fn from(c: &SolverConfig) -> Self {
        Self {
            lambda: c.lambda,
            lipschitz_l: c.lipschitz_l,
            inner_tol: c.inner_tol,
            outer_tol: c.outer_tol,
            max_inner: c.max_inner,
            max_outer: c.max_outer,
            rng_seed: c.rng_seed,
            marginal_floor: c.marginal_floor,
            reinit_each_outer: c.reinit_each_outer,
        }
    }
}

impl From<&FcConfig> for SolverConfig {
    fn from(c: &FcConfig) -> Self {
        Self {
            lambda: c.lambda,
            lipschitz_l: c.lipschitz_l,
            inner_tol: c.inner_tol,
            outer_tol: c.outer_tol,
            max_inner: c.max_inner,
            max_outer: c.max_outer,
            rng_seed: c.rng_seed,
            marginal_floor: c.marginal_floor,
            reinit_each_outer: c.reinit_each_outer,
        }
    }
}

/// Quality measures of a finished run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FcMetrics {
    pub discrete_objective: f64,
    pub fairness_error: f64,
    pub min_balance: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub monotonicity_violations: usize,
}

/// Energy after one outer iteration. `auxiliary` is NaN when unknown.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FcEnergy {
    pub outer: usize,
    pub total: f64,
    pub clustering: f64,
    pub fairness: f64,
    pub auxiliary: f64,
}

/// Opaque clustering problem with its demographic partition.
pub struct FcProblem {
    features: Matrix,
    problem: ClusteringProblem,
    demo: DemographicPartition,
}

/// Opaque solver output.
pub struct FcResult(SolveResult);

struct Failure {
    status: FcStatus,
    message: String,
}

impl Failure {
    fn new(status: FcStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<FairError> for Failure {
    fn from(e: FairError) -> Self {
        let status = match &e {
            FairError::DimensionMismatch { .. } => FcStatus::DimensionMismatch,
            FairError::LabelOutOfRange { .. } | FairError::InvalidArgument(_) => FcStatus::InvalidArgument,
            FairError::InvalidConfig(_) => FcStatus::InvalidConfig,
            FairError::InvalidPartition(_) => FcStatus::InvalidPartition,
            FairError::InvalidGraph(_) => FcStatus::InvalidGraph,
            FairError::NotOnSimplex { .. } | FairError::NonFiniteEnergy { .. } => FcStatus::Numerical,
            _ => FcStatus::Internal,
        };
        Self::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FcStatus {
    let failure = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            return FcStatus::Ok;
        }
        Ok(Err(failure)) => failure,
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            Failure::new(FcStatus::Panic, format!("panic: {detail}"))
        }
    };
    set_last_error(&failure.message);
    failure.status
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(FcStatus::NullPointer, format!("{what} is NULL")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be NULL or point to `len` readable values.
unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    non_null(p, what)?;
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

/// # Safety
/// `p` must be NULL or point to `len` writable values.
unsafe fn output<'a, T>(p: *mut T, len: usize, needed: usize, what: &str) -> Result<&'a mut [T], Failure> {
    non_null(p, what)?;
    if len < needed {
        return Err(Failure::new(
            FcStatus::BufferTooSmall,
            format!("{what} holds {len} values, {needed} needed"),
        ));
    }
    Ok(unsafe { slice::from_raw_parts_mut(p, needed) })
}

/// # Safety
/// `p` must be NULL or a live handle from this library.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    non_null(p, what)?;
    Ok(unsafe { &*p })
}

fn metric_of(raw: u32) -> Result<Metric, Failure> {
    match raw {
        0 => Ok(Metric::Euclidean),
        1 => Ok(Metric::Manhattan),
        2 => Ok(Metric::Chebyshev),
        other => Err(Failure::new(FcStatus::InvalidArgument, format!("unknown metric {other}"))),
    }
}

fn labels_in(raw: &[u32]) -> Vec<usize> {
    raw.iter().map(|&l| l as usize).collect()
}

fn labels_out(labels: &[usize], out: &mut [u32]) -> Result<(), Failure> {
    for (dst, &l) in out.iter_mut().zip(labels) {
        *dst = u32::try_from(l).map_err(|_| Failure::new(FcStatus::Internal, "label exceeds 32 bits"))?;
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fc_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into the library on this
/// thread.
#[no_mangle]
pub extern "C" fn fc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Default solver settings.
#[no_mangle]
pub extern "C" fn fc_config_default() -> FcConfig {
    FcConfig::from(&SolverConfig::default())
}

/// Builds a problem from `desc` and stores the handle in `*out`.
///
/// # Safety
/// `desc` and `out` must be valid pointers and the arrays in `desc` must
/// hold the sizes it declares.
#[no_mangle]
pub unsafe extern "C" fn fc_problem_new(desc: *const FcProblemDesc, out: *mut *mut FcProblem) -> FcStatus {
    guard(|| {
        let desc = unsafe { handle(desc, "desc")? };
        non_null(out, "out")?;
        let len = desc
            .n_points
            .checked_mul(desc.n_features)
            .ok_or_else(|| Failure::new(FcStatus::InvalidArgument, "feature buffer size overflows"))?;
        let features = Matrix::new(desc.n_points, desc.n_features, unsafe { input(desc.features, len, "features")? }.to_vec())?;
        let groups = labels_in(unsafe { input(desc.groups, desc.n_points, "groups")? });
        let demo = if desc.targets.is_null() {
            DemographicPartition::with_empirical_targets(groups, desc.n_groups)?
        } else {
            let targets = unsafe { input(desc.targets, desc.n_groups, "targets")? }.to_vec();
            DemographicPartition::new(groups, desc.n_groups, targets)?
        };
        let k = desc.n_clusters;
        let problem = match desc.objective {
            0 => ClusteringProblem::kmeans(features.clone(), k)?,
            1 => ClusteringProblem::kmedian(features.clone(), k, metric_of(desc.metric)?)?,
            2 => ClusteringProblem::ncut(knn_affinity(&features, desc.knn)?, k)?,
            other => {
                return Err(Failure::new(FcStatus::InvalidArgument, format!("unknown objective {other}")));
            }
        };
        let boxed = Box::new(FcProblem {
            features,
            problem,
            demo,
        });
        unsafe { *out = Box::into_raw(boxed) };
        Ok(())
    })
}

/// Releases a problem. NULL is ignored.
///
/// # Safety
/// `problem` must be NULL or a handle from [`fc_problem_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn fc_problem_free(problem: *mut FcProblem) {
    if !problem.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(unsafe { Box::from_raw(problem) })));
    }
}

/// K-means++ initial labels for the problem's features, written to
/// `labels[0..n_points]`.
///
/// # Safety
/// `problem` must be a live handle and `labels` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fc_kmeanspp_seed(
    problem: *const FcProblem,
    seed: u64,
    labels: *mut u32,
    len: usize,
) -> FcStatus {
    guard(|| {
        let p = unsafe { handle(problem, "problem")? };
        let out = unsafe { output(labels, len, p.problem.n_points(), "labels")? };
        let seeded = kmeanspp_seed(&p.features, p.problem.n_clusters(), seed)?;
        labels_out(&seeded, out)
    })
}

/// Runs the solver from `init_labels` and stores the result handle in
/// `*out`. A NULL `config` means [`fc_config_default`].
///
/// # Safety
/// `problem` must be a live handle, `init_labels` must hold `n_labels`
/// values, `config` must be NULL or valid and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_solve(
    problem: *const FcProblem,
    init_labels: *const u32,
    n_labels: usize,
    config: *const FcConfig,
    out: *mut *mut FcResult,
) -> FcStatus {
    guard(|| {
        let p = unsafe { handle(problem, "problem")? };
        non_null(out, "out")?;
        let init = labels_in(unsafe { input(init_labels, n_labels, "init_labels")? });
        let config = if config.is_null() {
            SolverConfig::default()
        } else {
            SolverConfig::from(unsafe { &*config })
        };
        let result = solve(&p.problem, &p.demo, &init, &config)?;
        unsafe { *out = Box::into_raw(Box::new(FcResult(result))) };
        Ok(())
    })
}

/// Releases a result. NULL is ignored.
///
/// # Safety
/// `result` must be NULL or a handle from [`fc_solve`] that has not been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn fc_result_free(result: *mut FcResult) {
    if !result.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(unsafe { Box::from_raw(result) })));
    }
}

/// Number of points and clusters of a result; either out-pointer may be NULL.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_result_shape(result: *const FcResult, n_points: *mut usize, n_clusters: *mut usize) -> FcStatus {
    guard(|| {
        let r = unsafe { handle(result, "result")? };
        if !n_points.is_null() {
            unsafe { *n_points = r.0.soft.n_points() };
        }
        if !n_clusters.is_null() {
            unsafe { *n_clusters = r.0.soft.n_clusters() };
        }
        Ok(())
    })
}

/// Final hard labels, written to `labels[0..n_points]`.
///
/// # Safety
/// `result` must be a live handle and `labels` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fc_result_labels(result: *const FcResult, labels: *mut u32, len: usize) -> FcStatus {
    guard(|| {
        let r = unsafe { handle(result, "result")? };
        let out = unsafe { output(labels, len, r.0.labels.len(), "labels")? };
        labels_out(&r.0.labels, out)
    })
}

/// Final soft assignment, `n_points * n_clusters` values row-major.
///
/// # Safety
/// `result` must be a live handle and `probs` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fc_result_soft(result: *const FcResult, probs: *mut f64, len: usize) -> FcStatus {
    guard(|| {
        let r = unsafe { handle(result, "result")? };
        let values = r.0.soft.probs().as_slice();
        let out = unsafe { output(probs, len, values.len(), "probs")? };
        out.copy_from_slice(values);
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle and `metrics` writable.
#[no_mangle]
pub unsafe extern "C" fn fc_result_metrics(result: *const FcResult, metrics: *mut FcMetrics) -> FcStatus {
    guard(|| {
        let r = &unsafe { handle(result, "result")? }.0;
        non_null(metrics, "metrics")?;
        let m = FcMetrics {
            discrete_objective: r.metrics.discrete_objective,
            fairness_error: r.metrics.fairness_error,
            min_balance: r.metrics.min_balance,
            outer_iterations: r.outer_iterations,
            inner_iterations: r.inner_iterations,
            monotonicity_violations: r.monotonicity_violations,
        };
        unsafe { *metrics = m };
        Ok(())
    })
}

/// Number of entries in the energy trace; 0 for NULL.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_result_trace_len(result: *const FcResult) -> usize {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.0.energy_trace.len()
}

/// Energy trace, one entry per outer iteration.
///
/// # Safety
/// `result` must be a live handle and `trace` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn fc_result_trace(result: *const FcResult, trace: *mut FcEnergy, len: usize) -> FcStatus {
    guard(|| {
        let r = &unsafe { handle(result, "result")? }.0;
        let out = unsafe { output(trace, len, r.energy_trace.len(), "trace")? };
        for (dst, rec) in out.iter_mut().zip(&r.energy_trace) {
            *dst = FcEnergy {
                outer: rec.outer,
                total: rec.energy.total,
                clustering: rec.energy.clustering,
                fairness: rec.energy.fairness,
                auxiliary: rec.energy.auxiliary.unwrap_or(f64::NAN),
            };
        }
        Ok(())
    })
}
