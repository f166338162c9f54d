//! C interface to hwir.
//!
//! Modules and simulators are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns
//! an [`HwirStatus`]; on failure [`hwir_last_error`] describes what went
//! wrong on the calling thread. Strings handed out by the library must be
//! released with [`hwir_string_free`].

use hwir::ir::{link, Module, UnitName};
use hwir::passes::lower_module;
use hwir::sim::{elaborate, write_vcd, Simulator};
use hwir::textio::{parse_module, parse_time_literal, print_module};
use hwir::verifier::{classify_level, verify};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HwirStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Verify = 4,
    Link = 5,
    Lower = 6,
    Sim = 7,
    Io = 8,
    NotFound = 9,
    Panic = 10,
}

pub struct HwirModule(Module);

pub struct HwirSim(Simulator);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HwirSimSummary {
    pub assertion_failures: u64,
    pub steps: u64,
    pub changes: u64,
    /// End time in femtoseconds.
    pub end_fs: u64,
    pub end_delta: u32,
    pub end_epsilon: u32,
    /// Nonzero if the event queue ran dry.
    pub finished: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

struct Error(HwirStatus, String);

type Res<T> = Result<T, Error>;

fn err<T>(status: HwirStatus, msg: impl Into<String>) -> Res<T> {
    Err(Error(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Res<()>) -> HwirStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HwirStatus::Ok,
        Ok(Err(Error(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal error");
            HwirStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return err(HwirStatus::NullArgument, format!("{} is null", what));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| err(HwirStatus::InvalidUtf8, format!("{} is not valid UTF-8", what)))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Res<&'a T> {
    p.as_ref()
        .ok_or_else(|| Error(HwirStatus::NullArgument, format!("{} is null", what)))
}

unsafe fn mut_arg<'a, T>(p: *mut T, what: &str) -> Res<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| Error(HwirStatus::NullArgument, format!("{} is null", what)))
}

fn out_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap().into_raw()
}

fn check_verified(m: &Module) -> Res<()> {
    let errs: Vec<String> = verify(m)
        .into_iter()
        .filter(|d| d.is_error())
        .map(|d| d.message)
        .collect();
    if errs.is_empty() {
        Ok(())
    } else {
        err(HwirStatus::Verify, errs.join("\n"))
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn hwir_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn hwir_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse and verify a module from its text form.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hwir_module_parse(text: *const c_char, out: *mut *mut HwirModule) -> HwirStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let m = parse_module(text).map_err(|ds| {
            let msg: Vec<String> = ds.into_iter().map(|d| d.message).collect();
            Error(HwirStatus::Parse, msg.join("\n"))
        })?;
        check_verified(&m)?;
        *out = Box::into_raw(Box::new(HwirModule(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn hwir_module_free(m: *mut HwirModule) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Print a module in text form. Free the result with `hwir_string_free`.
///
/// # Safety
/// `m` must be a live module handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hwir_module_print(m: *const HwirModule, out: *mut *mut c_char) -> HwirStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = ptr::null_mut();
        let m = ref_arg(m, "module")?;
        *out = out_string(print_module(&m.0));
        Ok(())
    })
}

/// Link `n` modules into a new one. The inputs are left untouched.
///
/// # Safety
/// `modules` must point to `n` live module handles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn hwir_module_link(
    modules: *const *const HwirModule,
    n: usize,
    out: *mut *mut HwirModule,
) -> HwirStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = ptr::null_mut();
        if modules.is_null() && n > 0 {
            return err(HwirStatus::NullArgument, "modules is null");
        }
        let mut ms = vec![];
        for i in 0..n {
            ms.push(ref_arg(*modules.add(i), "module")?.0.clone());
        }
        let m = link(ms).map_err(|e| Error(HwirStatus::Link, e.to_string()))?;
        check_verified(&m)?;
        *out = Box::into_raw(Box::new(HwirModule(m)));
        Ok(())
    })
}

/// Abstraction level of the whole module (1, 2 or 3).
///
/// # Safety
/// `m` must be a live module handle and `level` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hwir_module_level(m: *const HwirModule, level: *mut u8) -> HwirStatus {
    guard(|| {
        let level = mut_arg(level, "level")?;
        let m = ref_arg(m, "module")?;
        let r = classify_level(&m.0).map_err(|ds| {
            let msg: Vec<String> = ds.into_iter().map(|d| d.message).collect();
            Error(HwirStatus::Verify, msg.join("\n"))
        })?;
        *level = r.module_level;
        Ok(())
    })
}

/// Lower the module in place towards `target_level`. Units that cannot be
/// lowered stay unchanged; their `unit<TAB>pass<TAB>reason` lines are
/// returned through `report` if it is not null.
///
/// # Safety
/// `m` must be a live module handle; `report` null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hwir_module_lower(
    m: *mut HwirModule,
    target_level: u8,
    report: *mut *mut c_char,
) -> HwirStatus {
    guard(|| {
        if let Some(r) = report.as_mut() {
            *r = ptr::null_mut();
        }
        let m = mut_arg(m, "module")?;
        let r = lower_module(&mut m.0, target_level).map_err(|e| Error(HwirStatus::Lower, e))?;
        if let Some(out) = report.as_mut() {
            *out = out_string(r.render());
        }
        Ok(())
    })
}

/// Elaborate `top` (with or without the leading `@`) for simulation.
///
/// # Safety
/// `m` must be a live module handle, `top` a string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hwir_sim_new(m: *const HwirModule, top: *const c_char, out: *mut *mut HwirSim) -> HwirStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = ptr::null_mut();
        let m = ref_arg(m, "module")?;
        let top = str_arg(top, "top")?;
        let name = UnitName::global(top.strip_prefix('@').unwrap_or(top));
        let s = elaborate(&m.0, &name).map_err(|e| Error(HwirStatus::Sim, e.to_string()))?;
        *out = Box::into_raw(Box::new(HwirSim(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn hwir_sim_free(s: *mut HwirSim) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Run until the time literal `until` (e.g. "100ns"), or until no events
/// remain if `until` is null.
///
/// # Safety
/// `s` must be a live simulator; `until` null or a string; `summary` null
/// or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hwir_sim_run(s: *mut HwirSim, until: *const c_char, summary: *mut HwirSimSummary) -> HwirStatus {
    guard(|| {
        let s = mut_arg(s, "sim")?;
        let until = if until.is_null() {
            None
        } else {
            let t = str_arg(until, "until")?;
            Some(parse_time_literal(t).map_err(|d| Error(HwirStatus::Parse, d.message))?)
        };
        let r = s.0.run(until).map_err(|e| Error(HwirStatus::Sim, e.to_string()))?;
        if let Some(out) = summary.as_mut() {
            *out = HwirSimSummary {
                assertion_failures: r.assertion_failures.len() as u64,
                steps: r.steps,
                changes: r.changes,
                end_fs: r.end_time.fs,
                end_delta: r.end_time.delta,
                end_epsilon: r.end_time.epsilon,
                finished: r.finished as u8,
            };
        }
        Ok(())
    })
}

/// Current value of a signal, by hierarchical name such as "acc_tb.q".
///
/// # Safety
/// `s` must be a live simulator, `name` a string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hwir_sim_value(s: *const HwirSim, name: *const c_char, out: *mut *mut c_char) -> HwirStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = ref_arg(s, "sim")?;
        let name = str_arg(name, "name")?;
        let v =
            s.0.value_of(name)
                .ok_or_else(|| Error(HwirStatus::NotFound, format!("no signal named `{}`", name)))?;
        *out = out_string(v.to_string());
        Ok(())
    })
}

/// Write the recorded trace as a VCD file.
///
/// # Safety
/// `s` must be a live simulator and `path` a string.
#[no_mangle]
pub unsafe extern "C" fn hwir_sim_write_vcd(s: *const HwirSim, path: *const c_char) -> HwirStatus {
    guard(|| {
        let s = ref_arg(s, "sim")?;
        let path = str_arg(path, "path")?;
        let mut buf = vec![];
        write_vcd(s.0.trace(), &mut buf).map_err(|e| Error(HwirStatus::Io, e.to_string()))?;
        std::fs::write(path, buf).map_err(|e| Error(HwirStatus::Io, format!("{}: {}", path, e)))
    })
}
