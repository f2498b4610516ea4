//! C ABI over `indsup`.
//!
//! Scenarios and datasets are opaque handles created and destroyed by this
//! library. Every fallible call returns an [`IndsupStatus`] and writes its
//! result through an out-pointer; on failure a message is kept per thread
//! and can be read with [`indsup_last_error_message`]. Infinite divergences
//! come back as IEEE `+inf`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use indsup::cli::{build_scenario, cmd_separation, parse_config, RunConfig};
use indsup::complexity::{dimension_bound, gamma_bar};
use indsup::learning::{erm, theorem_bound};
use indsup::separation::{concentration_degree, identifiability_level, separation_degree};
use indsup::{Dataset, Distribution, Error, Loss, Scenario};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndsupStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    BadParams = 4,
    /// Probabilities or lengths do not describe valid distributions.
    InvalidInput = 5,
    NoWrongHypothesis = 6,
    CapExceeded = 7,
    UnboundedLoss = 8,
    Io = 9,
    Panic = 10,
}

/// A parsed scenario together with the config it came from.
pub struct IndsupScenario {
    config: RunConfig,
    scenario: Scenario,
}

/// A sampled dataset of `(x, o)` index pairs.
pub struct IndsupDataset {
    dataset: Dataset,
}

/// Outcome of empirical risk minimization.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndsupErm {
    pub h_index: usize,
    pub t_index: usize,
    pub empirical_risk: f64,
    pub classification_risk: f64,
    pub ties: usize,
}

/// Sizes of a scenario's spaces and classes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndsupShape {
    pub instances: usize,
    pub labels: usize,
    pub outcomes: usize,
    pub hypotheses: usize,
    pub transitions: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IndsupStatus {
    match e {
        Error::Config { .. } | Error::UnknownName(_) | Error::DuplicateName(_) => IndsupStatus::Config,
        Error::BadParams(_) | Error::SameLabel(_) | Error::SeparationHolds { .. } | Error::EmptyDataset => {
            IndsupStatus::BadParams
        }
        Error::NoWrongHypothesis => IndsupStatus::NoWrongHypothesis,
        Error::CapExceeded { .. } | Error::SpaceTooLarge { .. } => IndsupStatus::CapExceeded,
        Error::UnboundedLoss { .. } => IndsupStatus::UnboundedLoss,
        Error::Io(_) => IndsupStatus::Io,
        _ => IndsupStatus::InvalidInput,
    }
}

/// Runs `f`, recording errors and turning panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), (IndsupStatus, String)>) -> IndsupStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IndsupStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            IndsupStatus::Panic
        }
    }
}

fn lib(e: Error) -> (IndsupStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (IndsupStatus, String) {
    (IndsupStatus::NullPointer, format!("`{what}` is null"))
}

/// # Safety
/// `p` is null or valid for reads of `T`.
unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (IndsupStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` is null or valid for writes of `T`.
unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), (IndsupStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// # Safety
/// `p` is null or points to `len` readable doubles.
unsafe fn distribution(p: *const f64, len: usize, what: &str) -> Result<Distribution, (IndsupStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    let slice = std::slice::from_raw_parts(p, len);
    Distribution::from_weights(slice).map_err(lib)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn indsup_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn indsup_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML scenario config and builds the scenario.
///
/// # Safety
/// `toml` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_scenario_from_toml(toml: *const c_char, out: *mut *mut IndsupScenario) -> IndsupStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|e| (IndsupStatus::InvalidUtf8, e.to_string()))?;
        let config = parse_config(text).map_err(lib)?;
        let scenario = build_scenario(&config.scenario).map_err(lib)?;
        let handle = Box::into_raw(Box::new(IndsupScenario { config, scenario }));
        if out.is_null() {
            drop(Box::from_raw(handle));
            return Err(null("out"));
        }
        out.write(handle);
        Ok(())
    })
}

/// # Safety
/// `scenario` is null or came from [`indsup_scenario_from_toml`] and has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn indsup_scenario_free(scenario: *mut IndsupScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_scenario_shape(scenario: *const IndsupScenario, out: *mut IndsupShape) -> IndsupStatus {
    guard(|| {
        let s = &as_ref(scenario, "scenario")?.scenario;
        let shape = IndsupShape {
            instances: s.n(),
            labels: s.c(),
            outcomes: s.s(),
            hypotheses: s.hclass().len(),
            transitions: s.tclass().len(),
        };
        write(out, shape, "out")
    })
}

/// Separation degree `γ`.
///
/// # Safety
/// `scenario` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_separation_degree(scenario: *const IndsupScenario, out: *mut f64) -> IndsupStatus {
    guard(|| {
        let s = &as_ref(scenario, "scenario")?.scenario;
        write(out, separation_degree(s).gamma.value(), "out")
    })
}

/// Concentration degree `γ_C`; the scenario must use the concentration loss.
///
/// # Safety
/// `scenario` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_concentration_degree(scenario: *const IndsupScenario, out: *mut f64) -> IndsupStatus {
    guard(|| {
        let s = &as_ref(scenario, "scenario")?.scenario;
        let Loss::Concentration(sets) = s.loss() else {
            return Err((IndsupStatus::BadParams, "scenario does not use the concentration loss".into()));
        };
        write(out, concentration_degree(s, sets).map_err(lib)?.gamma_c, "out")
    })
}

/// Identifiability level `η` by full enumeration.
///
/// # Safety
/// `scenario` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_identifiability_level(scenario: *const IndsupScenario, out: *mut f64) -> IndsupStatus {
    guard(|| {
        let s = &as_ref(scenario, "scenario")?.scenario;
        write(out, identifiability_level(s).map_err(lib)?.eta, "out")
    })
}

/// The separation report as JSON, the same document the `separation`
/// command writes. Free the string with [`indsup_string_free`].
///
/// # Safety
/// `scenario` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_separation_report_json(
    scenario: *const IndsupScenario,
    out: *mut *mut c_char,
) -> IndsupStatus {
    guard(|| {
        let handle = as_ref(scenario, "scenario")?;
        let report = cmd_separation(&handle.config).map_err(lib)?;
        let text = report
            .files
            .into_iter()
            .find(|(name, _)| name == "separation.json")
            .map(|(_, text)| text)
            .unwrap_or_default();
        let c = CString::new(text).map_err(|e| (IndsupStatus::InvalidInput, e.to_string()))?;
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(c.into_raw());
        Ok(())
    })
}

/// # Safety
/// `s` is null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn indsup_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Draws `m` samples with the given seed.
///
/// # Safety
/// `scenario` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_dataset_sample(
    scenario: *const IndsupScenario,
    m: usize,
    seed: u64,
    out: *mut *mut IndsupDataset,
) -> IndsupStatus {
    guard(|| {
        let s = &as_ref(scenario, "scenario")?.scenario;
        if out.is_null() {
            return Err(null("out"));
        }
        let dataset = s.sample_dataset(m, seed).map_err(lib)?;
        out.write(Box::into_raw(Box::new(IndsupDataset { dataset })));
        Ok(())
    })
}

/// # Safety
/// `dataset` is null or came from [`indsup_dataset_sample`] and has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn indsup_dataset_free(dataset: *mut IndsupDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of samples; zero for a null handle.
///
/// # Safety
/// `dataset` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn indsup_dataset_len(dataset: *const IndsupDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.dataset.m())
}

/// Sample `k` as instance and outcome indices.
///
/// # Safety
/// `dataset` is a live handle; `x` and `o` are writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_dataset_get(
    dataset: *const IndsupDataset,
    k: usize,
    x: *mut usize,
    o: *mut usize,
) -> IndsupStatus {
    guard(|| {
        let d = &as_ref(dataset, "dataset")?.dataset;
        let &(xi, oi) = d
            .samples()
            .get(k)
            .ok_or_else(|| (IndsupStatus::BadParams, format!("sample {k} out of range ({})", d.m())))?;
        write(x, xi, "x")?;
        write(o, oi, "o")
    })
}

/// Empirical risk minimization over the scenario's `H × T`.
///
/// # Safety
/// `scenario` and `dataset` are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_erm(
    scenario: *const IndsupScenario,
    dataset: *const IndsupDataset,
    out: *mut IndsupErm,
) -> IndsupStatus {
    guard(|| {
        let s = &as_ref(scenario, "scenario")?.scenario;
        let d = &as_ref(dataset, "dataset")?.dataset;
        let fit = erm(s, d).map_err(lib)?;
        let result = IndsupErm {
            h_index: fit.h_index,
            t_index: fit.t_star,
            empirical_risk: fit.empirical_risk,
            classification_risk: fit.true_classification_risk,
            ties: fit.ties,
        };
        write(out, result, "out")
    })
}

/// `KL(p || q)` of two weight vectors, each normalized first.
///
/// # Safety
/// `p` and `q` point to `len` readable doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_kl(p: *const f64, q: *const f64, len: usize, out: *mut f64) -> IndsupStatus {
    guard(|| {
        let (p, q) = (distribution(p, len, "p")?, distribution(q, len, "q")?);
        write(out, indsup::kl(&p, &q).map_err(lib)?.value(), "out")
    })
}

/// Total variation distance of two weight vectors, each normalized first.
///
/// # Safety
/// `p` and `q` point to `len` readable doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_total_variation(p: *const f64, q: *const f64, len: usize, out: *mut f64) -> IndsupStatus {
    guard(|| {
        let (p, q) = (distribution(p, len, "p")?, distribution(q, len, "q")?);
        write(out, indsup::total_variation(&p, &q).map_err(lib)?, "out")
    })
}

/// `ln(2 Σ_{j ≤ min(d, m)} C(m, j))`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_gamma_bar(m: u64, d: u64, out: *mut f64) -> IndsupStatus {
    guard(|| write(out, gamma_bar(m, d).map_err(lib)?, "out"))
}

/// The generalization bound on the classification risk of ERM.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_theorem_bound(b: f64, eta: f64, d: u64, m: u64, delta: f64, out: *mut f64) -> IndsupStatus {
    guard(|| write(out, theorem_bound(b, eta, d, m, delta).map_err(lib)?, "out"))
}

/// Upper bound on the weak VC-major dimension from the Natarajan and
/// transition dimensions.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn indsup_dimension_bound(d_h: u64, d_t: u64, labels: usize, out: *mut u64) -> IndsupStatus {
    guard(|| write(out, dimension_bound(d_h, d_t, labels).map_err(lib)?, "out"))
}
