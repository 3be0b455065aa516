//! C ABI for the ipils optimizer.
//!
//! Every fallible function returns an [`IpilsStatus`]; on failure the message
//! is available from [`ipils_last_error`] on the same thread. Objects are
//! opaque handles released with their `_free` function. Strings returned
//! through `out` parameters are owned by the caller and released with
//! [`ipils_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ipils::exact::{exact_front, ExactFront};
use ipils::instance_io::{load_instance, parse_instance};
use ipils::metrics::m_metric;
use ipils::{Error, Instance, ObjectiveVector, ReferencePoint, Service};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpilsStatus {
    Ok = 0,
    InvalidArgument = 1,
    InvalidState = 2,
    NotFound = 3,
    Parse = 4,
    Resource = 5,
    NoOracle = 6,
    Io = 7,
    Json = 8,
    NullPointer = 9,
    Utf8 = 10,
    Panic = 11,
}

impl From<&Error> for IpilsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => IpilsStatus::InvalidArgument,
            Error::InvalidState(_) => IpilsStatus::InvalidState,
            Error::NotFound(_) => IpilsStatus::NotFound,
            Error::Parse { .. } => IpilsStatus::Parse,
            Error::Resource(_) => IpilsStatus::Resource,
            Error::NoOracle(_) => IpilsStatus::NoOracle,
            Error::Io(_) => IpilsStatus::Io,
            Error::Json(_) => IpilsStatus::Json,
        }
    }
}

/// A knapsack instance.
pub struct IpilsInstance(Instance);

/// An exact Pareto front.
pub struct IpilsFront(ExactFront);

/// A session service speaking the JSON request protocol.
pub struct IpilsService(Service);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: IpilsStatus, message: impl Into<String>) -> IpilsStatus {
    set_error(message.into());
    status
}

fn fail_with(e: Error) -> IpilsStatus {
    let status = IpilsStatus::from(&e);
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> IpilsStatus) -> IpilsStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(IpilsStatus::Panic, "internal panic"))
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, IpilsStatus> {
    if p.is_null() {
        return Err(fail(IpilsStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(IpilsStatus::Utf8, "string argument is not valid UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(IpilsStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn ipils_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ipils_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ipils_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an instance from text.
///
/// # Safety
/// `text` and `name` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ipils_instance_parse(
    text: *const c_char,
    name: *const c_char,
    out: *mut *mut IpilsInstance,
) -> IpilsStatus {
    guard(|| {
        non_null!(out);
        let text = try_status!(read_str(text));
        let name = try_status!(read_str(name));
        match parse_instance(text, name) {
            Ok(i) => {
                *out = Box::into_raw(Box::new(IpilsInstance(i)));
                IpilsStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Loads an instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ipils_instance_load(path: *const c_char, out: *mut *mut IpilsInstance) -> IpilsStatus {
    guard(|| {
        non_null!(out);
        let path = try_status!(read_str(path));
        match load_instance(path.as_ref()) {
            Ok(i) => {
                *out = Box::into_raw(Box::new(IpilsInstance(i)));
                IpilsStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `instance` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ipils_instance_free(instance: *mut IpilsInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of items, or 0 for null.
///
/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ipils_instance_num_items(instance: *const IpilsInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.0.num_items())
}

/// Number of objectives, or 0 for null.
///
/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ipils_instance_num_objectives(instance: *const IpilsInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.0.num_objectives())
}

/// Evaluates a selection given as `len` bytes (nonzero = selected). Writes
/// the objective values to `objectives` (room for `num_objectives` values)
/// and the total cost to `cost`. Feasibility is reported through
/// `feasible`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn ipils_instance_evaluate(
    instance: *const IpilsInstance,
    selection: *const u8,
    len: usize,
    objectives: *mut i64,
    num_objectives: usize,
    cost: *mut i64,
    feasible: *mut bool,
) -> IpilsStatus {
    guard(|| {
        non_null!(instance, objectives, cost, feasible);
        if selection.is_null() && len > 0 {
            return fail(IpilsStatus::NullPointer, "`selection` is null");
        }
        let inst = &(*instance).0;
        if num_objectives != inst.num_objectives() {
            return fail(
                IpilsStatus::InvalidArgument,
                format!(
                    "objective buffer holds {num_objectives}, instance has {}",
                    inst.num_objectives()
                ),
            );
        }
        let bits: Vec<bool> = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(selection, len)
                .iter()
                .map(|&b| b != 0)
                .collect()
        };
        match inst.evaluate(&bits) {
            Ok(sol) => {
                std::slice::from_raw_parts_mut(objectives, num_objectives).copy_from_slice(sol.objectives().values());
                *cost = sol.cost();
                *feasible = inst.is_feasible(&sol);
                IpilsStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Computes the exact Pareto front (dynamic program for two objectives,
/// enumeration otherwise).
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ipils_front_compute(instance: *const IpilsInstance, out: *mut *mut IpilsFront) -> IpilsStatus {
    guard(|| {
        non_null!(instance, out);
        match exact_front(&(*instance).0) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(IpilsFront(f)));
                IpilsStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Parses a front file (`z1 ... zK bits` per line).
///
/// # Safety
/// `text` must be a NUL-terminated string; `instance` a live handle or null
/// (no witness validation); `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ipils_front_parse(
    text: *const c_char,
    instance: *const IpilsInstance,
    out: *mut *mut IpilsFront,
) -> IpilsStatus {
    guard(|| {
        non_null!(out);
        let text = try_status!(read_str(text));
        match ExactFront::from_text(text, instance.as_ref().map(|i| &i.0)) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(IpilsFront(f)));
                IpilsStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `front` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ipils_front_free(front: *mut IpilsFront) {
    if !front.is_null() {
        drop(Box::from_raw(front));
    }
}

/// Number of Pareto-optimal outcomes, or 0 for null.
///
/// # Safety
/// `front` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ipils_front_len(front: *const IpilsFront) -> usize {
    front.as_ref().map_or(0, |f| f.0.len())
}

/// Copies the objective vector of point `index` into `out` (room for `k`
/// values). Points are ordered by objective vector, descending.
///
/// # Safety
/// `front` must be a live handle and `out` valid for `k` values.
#[no_mangle]
pub unsafe extern "C" fn ipils_front_point(
    front: *const IpilsFront,
    index: usize,
    out: *mut i64,
    k: usize,
) -> IpilsStatus {
    guard(|| {
        non_null!(front, out);
        let front = &(*front).0;
        let Some(p) = front.points.get(index) else {
            return fail(IpilsStatus::NotFound, format!("no front point {index}"));
        };
        let values = p.objectives.values();
        if values.len() != k {
            return fail(
                IpilsStatus::InvalidArgument,
                format!("buffer holds {k}, point has {}", values.len()),
            );
        }
        std::slice::from_raw_parts_mut(out, k).copy_from_slice(values);
        IpilsStatus::Ok
    })
}

/// Serializes the front in the front file format.
///
/// # Safety
/// `front` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ipils_front_to_text(front: *const IpilsFront, out: *mut *mut c_char) -> IpilsStatus {
    guard(|| {
        non_null!(front, out);
        *out = into_c_string((*front).0.to_text());
        IpilsStatus::Ok
    })
}

/// Fraction of the front inside the cone of `reference` that the `count`
/// approximation points (row-major, `k` values each) contain. With
/// `active == false` the cone is the whole space.
///
/// # Safety
/// `approx` must hold `count * k` values and `reference` `k` values.
#[no_mangle]
pub unsafe extern "C" fn ipils_m_metric(
    front: *const IpilsFront,
    approx: *const i64,
    count: usize,
    k: usize,
    reference: *const i64,
    active: bool,
    out: *mut f64,
) -> IpilsStatus {
    guard(|| {
        non_null!(front, reference, out);
        if approx.is_null() && count > 0 {
            return fail(IpilsStatus::NullPointer, "`approx` is null");
        }
        if k == 0 {
            return fail(IpilsStatus::InvalidArgument, "k must be positive");
        }
        let front = &(*front).0;
        if front.points.first().is_some_and(|p| p.objectives.len() != k) {
            return fail(IpilsStatus::InvalidArgument, "dimension does not match the front");
        }
        let points: Vec<ObjectiveVector> = if count == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(approx, count * k)
                .chunks(k)
                .map(|c| ObjectiveVector(c.to_vec()))
                .collect()
        };
        let mut r = ReferencePoint::new(std::slice::from_raw_parts(reference, k).to_vec());
        r.active = active;
        *out = m_metric(&points, front, &r);
        IpilsStatus::Ok
    })
}

/// Creates an empty session service.
#[no_mangle]
pub extern "C" fn ipils_service_new() -> *mut IpilsService {
    Box::into_raw(Box::new(IpilsService(Service::new())))
}

/// Stops all sessions and releases the service.
///
/// # Safety
/// `service` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ipils_service_free(service: *mut IpilsService) {
    if !service.is_null() {
        drop(Box::from_raw(service));
    }
}

/// Handles one JSON request and stores the JSON response in `response`. The
/// response is written even when the request fails; the status then mirrors
/// the error kind in the response.
///
/// # Safety
/// `service` must be a live handle, `request` a NUL-terminated string and
/// `response` writable.
#[no_mangle]
pub unsafe extern "C" fn ipils_service_request(
    service: *const IpilsService,
    request: *const c_char,
    response: *mut *mut c_char,
) -> IpilsStatus {
    guard(|| {
        non_null!(service, response);
        let request = try_status!(read_str(request));
        let value = (*service).0.handle_value(request);
        let status = match value["error"]["kind"].as_str() {
            None => IpilsStatus::Ok,
            Some(kind) => {
                set_error(value["error"]["message"].as_str().unwrap_or(kind).to_string());
                status_of_kind(kind)
            }
        };
        *response = into_c_string(value.to_string());
        status
    })
}

fn status_of_kind(kind: &str) -> IpilsStatus {
    match kind {
        "invalid-argument" => IpilsStatus::InvalidArgument,
        "invalid-state" => IpilsStatus::InvalidState,
        "not-found" => IpilsStatus::NotFound,
        "parse" => IpilsStatus::Parse,
        "resource" => IpilsStatus::Resource,
        "no-oracle" => IpilsStatus::NoOracle,
        "io" => IpilsStatus::Io,
        _ => IpilsStatus::Json,
    }
}
