//! C ABI for `bhcluster`.
//!
//! Objects are opaque handles created by `bh_*_new`-style functions and
//! released with the matching `bh_*_free`. Every fallible function returns a
//! [`BhStatus`]; on failure `bh_last_error` gives a message that stays valid
//! until the next call on the same thread. Strings handed out by the library
//! must be released with `bh_string_free`. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bhcluster::commands;
use bhcluster::config::{model_from_toml_str, Command, RunConfig};
use bhcluster::expansion::{approximate_log_partition, ExpansionConfig, ExpansionReport};
use bhcluster::lattice::{CouplingMatrix, CouplingSpec, Lattice, ModelInstance, OnsiteParams};
use bhcluster::oracle::{correlation, moments, mutual_information, occupation_distribution, thermalize, MonomialOperator, ThermalState};
use bhcluster::Error;

/// Result codes. Values 2-4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BhStatus {
    Ok = 0,
    Io = 1,
    Config = 2,
    ResourceCap = 3,
    Numerical = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BhCommand {
    Approx = 0,
    Exact = 1,
    Compare = 2,
    Clustering = 3,
    Moments = 4,
    Kp = 5,
}

/// A validated model instance.
pub struct BhModel {
    inner: ModelInstance,
}

/// Result of a truncated cluster expansion.
pub struct BhReport {
    inner: ExpansionReport,
}

/// A thermal state from exact diagonalization.
pub struct BhState {
    inner: ThermalState,
}

/// Scalar summary of a [`BhReport`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BhReportValues {
    pub f_beta: f64,
    pub log_z_w: f64,
    pub t_m: f64,
    pub m: usize,
    pub q: u32,
    pub polymer_count: usize,
    pub cluster_count: usize,
    pub kp_violated: bool,
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BhStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BhStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            BhStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(what))) => {
            set_error(format!("{what} is not valid UTF-8"));
            BhStatus::InvalidUtf8
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            match e.exit_code() {
                2 => BhStatus::Config,
                3 => BhStatus::ResourceCap,
                4 => BhStatus::Numerical,
                _ => BhStatus::Io,
            }
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            BhStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = value;
    Ok(())
}

unsafe fn emit_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = CString::new(s).map_err(|_| Failure::Core(Error::Io("string contains NUL".into())))?.into_raw();
    Ok(())
}

/// Library version, e.g. `"0.1.0"`. Static storage; do not free.
#[no_mangle]
pub extern "C" fn bh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Version of the JSON/CSV report schema.
#[no_mangle]
pub extern "C" fn bh_schema_version() -> u32 {
    bhcluster::SCHEMA_VERSION
}

/// Message for the last failed call on this thread, or NULL.
#[no_mangle]
pub extern "C" fn bh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a model from the `[model]` section of a TOML document.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_model_from_toml(toml: *const c_char, out: *mut *mut BhModel) -> BhStatus {
    guard(|| {
        let model = model_from_toml_str(text(toml, "toml")?)?;
        emit(out, BhModel { inner: model })
    })
}

unsafe fn uniform_model(
    dims: *const usize,
    n_dims: usize,
    periodic: bool,
    spec: CouplingSpec,
    u: f64,
    mu: f64,
    beta: f64,
    out: *mut *mut BhModel,
) -> BhStatus {
    guard(|| {
        let lattice = Lattice::new(slice(dims, n_dims, "dims")?.to_vec(), periodic)?;
        let model = ModelInstance::uniform(lattice, &spec, u, mu, beta)?;
        emit(out, BhModel { inner: model })
    })
}

/// Hypercubic lattice with couplings `g / (1 + d)^alpha` and uniform `U`, `mu`.
///
/// # Safety
/// `dims` must point to `n_dims` extents; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_model_long_range(
    dims: *const usize,
    n_dims: usize,
    periodic: bool,
    g: f64,
    alpha: f64,
    u: f64,
    mu: f64,
    beta: f64,
    out: *mut *mut BhModel,
) -> BhStatus {
    uniform_model(dims, n_dims, periodic, CouplingSpec::LongRange { g, alpha }, u, mu, beta, out)
}

/// Hypercubic lattice with coupling `g` up to graph distance `cutoff`.
///
/// # Safety
/// `dims` must point to `n_dims` extents; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_model_finite_range(
    dims: *const usize,
    n_dims: usize,
    periodic: bool,
    g: f64,
    cutoff: usize,
    u: f64,
    mu: f64,
    beta: f64,
    out: *mut *mut BhModel,
) -> BhStatus {
    uniform_model(dims, n_dims, periodic, CouplingSpec::FiniteRange { g, cutoff }, u, mu, beta, out)
}

/// Open chain of `n` sites with an explicit symmetric `n x n` coupling matrix
/// (row-major) and per-site `U`, `mu`.
///
/// # Safety
/// `matrix` must hold `n * n` values, `u` and `mu` `n` values each.
#[no_mangle]
pub unsafe extern "C" fn bh_model_explicit(
    n: usize,
    matrix: *const f64,
    u: *const f64,
    mu: *const f64,
    beta: f64,
    out: *mut *mut BhModel,
) -> BhStatus {
    guard(|| {
        let flat = slice(matrix, n * n, "matrix")?;
        let rows: Vec<Vec<f64>> = flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let lattice = Lattice::chain(n)?;
        let couplings = CouplingMatrix::build(&lattice, &CouplingSpec::Explicit { matrix: rows, envelope: None })?;
        let onsite = OnsiteParams::new(slice(u, n, "u")?.to_vec(), slice(mu, n, "mu")?.to_vec())?;
        emit(out, BhModel { inner: ModelInstance::new(lattice, couplings, onsite, beta)? })
    })
}

/// Number of sites, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bh_model_num_sites(model: *const BhModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_sites())
}

/// # Safety
/// `model` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn bh_model_free(model: *mut BhModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Truncated cluster expansion at order `m` and cutoff `q`. `workers = 0`
/// uses the default thread pool.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_approximate(
    model: *const BhModel,
    m: usize,
    q: u32,
    workers: usize,
    out: *mut *mut BhReport,
) -> BhStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        let cfg = ExpansionConfig::new(m, q).with_workers(workers);
        emit(out, BhReport { inner: approximate_log_partition(&model.inner, &cfg)? })
    })
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_report_values(report: *const BhReport, out: *mut BhReportValues) -> BhStatus {
    guard(|| {
        let r = &borrow(report, "report")?.inner;
        put(
            out,
            BhReportValues {
                f_beta: r.f_beta,
                log_z_w: r.log_z_w,
                t_m: r.t_m,
                m: r.m,
                q: r.q,
                polymer_count: r.polymer_count,
                cluster_count: r.cluster_count,
                kp_violated: r.kp_violated,
            },
        )
    })
}

/// Contribution of clusters with total size `order` (1-based).
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_report_order(report: *const BhReport, order: usize, out: *mut f64) -> BhStatus {
    guard(|| {
        let r = &borrow(report, "report")?.inner;
        let term = r
            .per_order
            .iter()
            .find(|t| t.order == order)
            .ok_or_else(|| Error::InvalidInput(format!("order {order} outside 1..={}", r.m)))?;
        put(out, term.contribution)
    })
}

/// The report as JSON; free with `bh_string_free`.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_report_to_json(report: *const BhReport, out: *mut *mut c_char) -> BhStatus {
    guard(|| {
        let r = &borrow(report, "report")?.inner;
        let s = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
        emit_string(out, s)
    })
}

/// # Safety
/// `report` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn bh_report_free(report: *mut BhReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Exact thermal state at cutoff `q`, refusing Hilbert spaces larger than
/// `dimension_cap`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_thermalize(
    model: *const BhModel,
    q: u32,
    dimension_cap: usize,
    out: *mut *mut BhState,
) -> BhStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        emit(out, BhState { inner: thermalize(&model.inner, q, dimension_cap)? })
    })
}

/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_state_log_z(state: *const BhState, out: *mut f64) -> BhStatus {
    guard(|| put(out, borrow(state, "state")?.inner.log_z))
}

/// `<n_site^l>`.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_state_moment(state: *const BhState, site: usize, l: u32, out: *mut f64) -> BhStatus {
    guard(|| {
        let ms = moments(&borrow(state, "state")?.inner, site, l)?;
        put(out, ms[l as usize])
    })
}

/// Writes `p_0..p_q` for `site`; `len` must be `q + 1`.
///
/// # Safety
/// `state` must be a live handle; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn bh_state_occupation(state: *const BhState, site: usize, buf: *mut f64, len: usize) -> BhStatus {
    guard(|| {
        let st = &borrow(state, "state")?.inner;
        let p = occupation_distribution(st, site)?;
        if len != p.len() {
            return Err(Error::InvalidInput(format!("buffer holds {len} values, need {}", p.len())).into());
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&p);
        Ok(())
    })
}

/// Connected correlation `C(a_i^dag, a_j)` for `i != j`.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_state_hopping_correlation(
    state: *const BhState,
    i: usize,
    j: usize,
    out: *mut f64,
) -> BhStatus {
    guard(|| {
        let st = &borrow(state, "state")?.inner;
        put(out, correlation(st, &MonomialOperator::create(i), &MonomialOperator::annihilate(j))?)
    })
}

/// `I(A:B)` for a bipartition of the lattice.
///
/// # Safety
/// `a` and `b` must hold `na` and `nb` site indices; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_state_mutual_information(
    state: *const BhState,
    a: *const usize,
    na: usize,
    b: *const usize,
    nb: usize,
    dimension_cap: usize,
    out: *mut f64,
) -> BhStatus {
    guard(|| {
        let st = &borrow(state, "state")?.inner;
        let value = mutual_information(st, slice(a, na, "a")?, slice(b, nb, "b")?, dimension_cap)?;
        put(out, value)
    })
}

/// # Safety
/// `state` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn bh_state_free(state: *mut BhState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Runs a command-line subcommand on a TOML configuration held in memory and
/// returns the rendered document (JSON or CSV per `[output] format`). The
/// `[output] path` key is ignored. Free the result with `bh_string_free`.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bh_run(command: BhCommand, config_toml: *const c_char, out: *mut *mut c_char) -> BhStatus {
    guard(|| {
        let command = match command {
            BhCommand::Approx => Command::Approx,
            BhCommand::Exact => Command::Exact,
            BhCommand::Compare => Command::Compare,
            BhCommand::Clustering => Command::Clustering,
            BhCommand::Moments => Command::Moments,
            BhCommand::Kp => Command::Kp,
        };
        let cfg = RunConfig::from_toml_str(text(config_toml, "config_toml")?, &[], command)?;
        emit_string(out, commands::run(command, &cfg)?)
    })
}
