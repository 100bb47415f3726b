//! C ABI over `acx-core`.
//!
//! Systems and mappings are opaque handles created by the `*_from_json`,
//! `*_builtin` and `*_load` functions and released with the matching
//! `*_free`. Every fallible call returns an [`AcxStatus`]; on failure the
//! message is available from [`acx_last_error`] until the next call on the
//! same thread. Strings handed out by the library must be released with
//! [`acx_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use acx_core::corpus;
use acx_core::explore::seed_state;
use acx_core::lattice::{self, PropertySet, PropertyTag};
use acx_core::mapping::{load_mapping, RawMapping};
use acx_core::report::Report;
use acx_core::{props, reachable, Bound, Comparison, Error, MappingDef, SystemDef};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcxStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed JSON or a description that fails validation.
    InvalidInput = 3,
    /// Unknown corpus id, simulation name or property tag.
    NotFound = 4,
    /// File could not be read.
    Io = 5,
    /// The engine panicked; the handle arguments should be discarded.
    Internal = 6,
}

/// Outcome of comparing two property sets.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcxComparison {
    Equal = 0,
    StrictlyStronger = 1,
    StrictlyWeaker = 2,
    Incomparable = 3,
}

/// A validated access control system.
pub struct AcxSystem(Arc<SystemDef>);

/// A validated mapping together with its source and target systems.
pub struct AcxMapping(Arc<MappingDef>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> AcxStatus {
    match e {
        Error::UnknownId(_) | Error::UnknownSimulation(_) | Error::UnknownTag(_) | Error::NoCanonicalData(_) => {
            AcxStatus::NotFound
        }
        Error::Io { .. } => AcxStatus::Io,
        _ => AcxStatus::InvalidInput,
    }
}

struct Fail(AcxStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AcxStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AcxStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error".into());
            AcxStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(AcxStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(AcxStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(AcxStatus::NullArgument, format!("`{what}` is null")))
    } else {
        Ok(())
    }
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn acx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn acx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn acx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a system description.
///
/// # Safety
/// `json` and `name` must be null or NUL-terminated strings; `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acx_system_from_json(
    json: *const c_char,
    name: *const c_char,
    out: *mut *mut AcxSystem,
) -> AcxStatus {
    guard(|| {
        non_null(out, "out")?;
        let json = text(json, "json")?;
        let name = optional_text(name, "name")?.unwrap_or("system");
        let sys = SystemDef::from_json_str(json, name)?;
        put(out, AcxSystem(Arc::new(sys)));
        Ok(())
    })
}

/// Loads a corpus system by id (`acl`, `rbac`, `acl-transfer`).
///
/// # Safety
/// `id` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acx_system_builtin(id: *const c_char, out: *mut *mut AcxSystem) -> AcxStatus {
    guard(|| {
        non_null(out, "out")?;
        let sys = corpus::builtin_system(text(id, "id")?)?;
        put(out, AcxSystem(Arc::new(sys)));
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a handle from this library not freed already.
#[no_mangle]
pub unsafe extern "C" fn acx_system_free(sys: *mut AcxSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Counts the states reachable from the system's seeded initial state.
///
/// # Safety
/// `sys` must be a live handle; `out_states` must be a valid pointer and
/// `out_truncated` null or valid.
#[no_mangle]
pub unsafe extern "C" fn acx_system_explore(
    sys: *const AcxSystem,
    atoms_per_sort: usize,
    new_atoms_per_sort: usize,
    max_depth: usize,
    out_states: *mut usize,
    out_truncated: *mut bool,
) -> AcxStatus {
    guard(|| {
        non_null(sys, "sys")?;
        non_null(out_states, "out_states")?;
        if atoms_per_sort == 0 || max_depth == 0 {
            return Err(Fail(AcxStatus::InvalidInput, "bound needs at least one atom per sort and depth at least 1".into()));
        }
        let s = &(*sys).0;
        let start = seed_state(s, s.init(), atoms_per_sort);
        let r = reachable(s, &start, Bound::new(atoms_per_sort, new_atoms_per_sort, max_depth));
        *out_states = r.len();
        if !out_truncated.is_null() {
            *out_truncated = r.truncated;
        }
        Ok(())
    })
}

/// Parses a mapping between two already loaded systems. The mapping's own
/// `source` and `target` fields are not consulted.
///
/// # Safety
/// `json` must be a NUL-terminated string, `source` and `target` live
/// handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acx_mapping_from_json(
    json: *const c_char,
    source: *const AcxSystem,
    target: *const AcxSystem,
    out: *mut *mut AcxMapping,
) -> AcxStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(source, "source")?;
        non_null(target, "target")?;
        let raw = RawMapping::from_json_str(text(json, "json")?)?;
        let m = load_mapping(&raw, (*source).0.clone(), (*target).0.clone()).map_err(Error::from)?;
        put(out, AcxMapping(Arc::new(m)));
        Ok(())
    })
}

/// Loads a corpus mapping by id.
///
/// # Safety
/// `id` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acx_mapping_builtin(id: *const c_char, out: *mut *mut AcxMapping) -> AcxStatus {
    guard(|| {
        non_null(out, "out")?;
        let m = corpus::builtin_mapping(text(id, "id")?)?;
        put(out, AcxMapping(Arc::new(m)));
        Ok(())
    })
}

/// Loads a mapping file, resolving its systems next to it or in the corpus.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acx_mapping_load(path: *const c_char, out: *mut *mut AcxMapping) -> AcxStatus {
    guard(|| {
        non_null(out, "out")?;
        let m = corpus::load_mapping_file(Path::new(text(path, "path")?))?;
        put(out, AcxMapping(Arc::new(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library not freed already.
#[no_mangle]
pub unsafe extern "C" fn acx_mapping_free(m: *mut AcxMapping) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

fn parse_props(s: &str) -> Result<PropertySet, Fail> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(PropertyTag::ALL.iter().copied().collect());
    }
    let set = lattice::parse_set(s)?;
    if set.is_empty() {
        return Err(Fail(AcxStatus::InvalidInput, "no property tags given".into()));
    }
    Ok(set)
}

/// Checks comma separated property tags (or `all`) at a bound written as
/// `atoms,new,depth` (null for the default). On success `*out_report`
/// receives the JSON report and `*out_all_hold` whether every result holds.
///
/// # Safety
/// `m` must be a live handle; `props` a NUL-terminated string; `bound`
/// null or a NUL-terminated string; `out_report` a valid pointer and
/// `out_all_hold` null or valid.
#[no_mangle]
pub unsafe extern "C" fn acx_check(
    m: *const AcxMapping,
    props: *const c_char,
    bound: *const c_char,
    out_report: *mut *mut c_char,
    out_all_hold: *mut bool,
) -> AcxStatus {
    guard(|| {
        non_null(m, "mapping")?;
        non_null(out_report, "out_report")?;
        let tags = parse_props(text(props, "props")?)?;
        let bound = match optional_text(bound, "bound")? {
            Some(b) => b.parse::<Bound>().map_err(|e| Fail(AcxStatus::InvalidInput, e.to_string()))?,
            None => Bound::default(),
        };
        let mapping = (*m).0.clone();
        let run = props::check_mapping(mapping.clone(), bound, &tags)?;
        let report = Report::new(&mapping, run);
        if !out_all_hold.is_null() {
            *out_all_hold = report.summary.all_hold;
        }
        *out_report = owned_string(report.to_json());
        Ok(())
    })
}

fn named_or_set(s: &str) -> Result<PropertySet, Fail> {
    if lattice::simulation_names().iter().any(|n| n.eq_ignore_ascii_case(s)) {
        return Ok(lattice::decompose_named(s)?);
    }
    Ok(lattice::parse_set(s)?)
}

/// Compares two simulations by name, or two comma separated tag sets.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acx_lattice_compare(
    a: *const c_char,
    b: *const c_char,
    out: *mut AcxComparison,
) -> AcxStatus {
    guard(|| {
        non_null(out, "out")?;
        let (sa, sb) = (named_or_set(text(a, "a")?)?, named_or_set(text(b, "b")?)?);
        *out = match lattice::compare_sets(&sa, &sb) {
            Comparison::Equal => AcxComparison::Equal,
            Comparison::StrictlyStronger => AcxComparison::StrictlyStronger,
            Comparison::StrictlyWeaker => AcxComparison::StrictlyWeaker,
            Comparison::Incomparable => AcxComparison::Incomparable,
        };
        Ok(())
    })
}

/// Decomposition of a named simulation as space separated tag symbols.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` a valid pointer. The
/// string written to `*out` must be released with [`acx_string_free`].
#[no_mangle]
pub unsafe extern "C" fn acx_lattice_decompose(name: *const c_char, out: *mut *mut c_char) -> AcxStatus {
    guard(|| {
        non_null(out, "out")?;
        let tags = lattice::decompose_ordered(text(name, "name")?)?;
        *out = owned_string(lattice::format_set(&tags));
        Ok(())
    })
}
