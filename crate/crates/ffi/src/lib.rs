//! C ABI over `permstab`. Objects are opaque handles released with the
//! matching `ps_*_free`; strings returned by the library are released with
//! `ps_string_free`. Every fallible call returns a [`PsStatus`] and leaves a
//! message for `ps_last_error_message` on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use permstab::action_space::ActionSpace;
use permstab::config::{ConstantOverrides, Constants, Mode};
use permstab::presentation::{build_e, build_presentation, AbelianPresentation, EquationSet, PresentationSpec};
use permstab::rational::parse_big_rational;
use permstab::tiling_engine::repair;
use permstab::Error;
use serde::Deserialize;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Presentation = 3,
    Instance = 4,
    Precondition = 5,
    Budget = 6,
    Overflow = 7,
    Argument = 8,
    Io = 9,
    Json = 10,
    Panic = 11,
}

/// A presentation together with its canonical equation set.
pub struct PsPresentation {
    p: AbelianPresentation,
    e: EquationSet,
}

pub struct PsActionSpace {
    x: ActionSpace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PsStatus {
    match e {
        Error::Presentation(_) => PsStatus::Presentation,
        Error::Instance(_) => PsStatus::Instance,
        Error::Precondition(_) => PsStatus::Precondition,
        Error::Budget(_) => PsStatus::Budget,
        Error::Overflow(_) => PsStatus::Overflow,
        Error::Argument(_) => PsStatus::Argument,
        Error::Io(_) => PsStatus::Io,
        Error::Json(_) => PsStatus::Json,
    }
}

enum Fail {
    Null(&'static str),
    Utf8,
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PsStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PsStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string is not valid UTF-8".into());
            PsStatus::InvalidUtf8
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8)
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail::Utf8)?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Builds `Z^d × Π Z/β_i` on `m` generators. `betas` may be null when
/// `n_betas` is 0.
///
/// # Safety
/// `betas` must point to `n_betas` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_presentation_new(
    m: usize,
    d: usize,
    betas: *const u64,
    n_betas: usize,
    out: *mut *mut PsPresentation,
) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let betas = if n_betas == 0 {
            &[][..]
        } else {
            if betas.is_null() {
                return Err(Fail::Null("betas"));
            }
            std::slice::from_raw_parts(betas, n_betas)
        };
        let p = build_presentation(m, d, betas)?;
        let e = build_e(&p);
        *out = Box::into_raw(Box::new(PsPresentation { p, e }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from `ps_presentation_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_presentation_free(p: *mut PsPresentation) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of words in the presentation's equation set.
///
/// # Safety
/// `p` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ps_presentation_equation_count(p: *const PsPresentation) -> usize {
    p.as_ref().map_or(0, |p| p.e.len())
}

/// Builds an action from `m` rows of `n` images each, row-major.
///
/// # Safety
/// `perms` must point to `m·n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_action_space_new(
    n: usize,
    m: usize,
    perms: *const u32,
    out: *mut *mut PsActionSpace,
) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        if perms.is_null() && n * m > 0 {
            return Err(Fail::Null("perms"));
        }
        let flat = if n * m == 0 { &[][..] } else { std::slice::from_raw_parts(perms, n * m) };
        let rows = (0..m).map(|j| flat[j * n..(j + 1) * n].iter().map(|&v| v as usize).collect()).collect();
        *out = Box::into_raw(Box::new(PsActionSpace { x: ActionSpace::new(rows)? }));
        Ok(())
    })
}

/// Parses an instance file (`{"m", "n", "perms"}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_action_space_from_json(json: *const c_char, out: *mut *mut PsActionSpace) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let (x, _) = ActionSpace::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(PsActionSpace { x }));
        Ok(())
    })
}

/// Serializes an action, tagged with `presentation` when it is non-null.
///
/// # Safety
/// Handles must be live (or null for `presentation`); `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_action_space_to_json(
    x: *const PsActionSpace,
    presentation: *const PsPresentation,
    out: *mut *mut c_char,
) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let x = deref(x, "space")?;
        let spec = presentation.as_ref().map(|p| PresentationSpec::of(&p.p));
        out_string(x.x.to_json(spec), out)
    })
}

/// # Safety
/// `x` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ps_action_space_n(x: *const PsActionSpace) -> usize {
    x.as_ref().map_or(0, |x| x.x.n())
}

/// # Safety
/// `x` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ps_action_space_m(x: *const PsActionSpace) -> usize {
    x.as_ref().map_or(0, |x| x.x.m())
}

/// # Safety
/// `x` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_action_space_free(x: *mut PsActionSpace) {
    if !x.is_null() {
        drop(Box::from_raw(x));
    }
}

/// `L_E` as a reduced fraction.
///
/// # Safety
/// Handles must be live and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn ps_local_defect(
    x: *const PsActionSpace,
    p: *const PsPresentation,
    numer: *mut i64,
    denom: *mut i64,
) -> PsStatus {
    guard(|| {
        let (x, p) = (deref(x, "space")?, deref(p, "presentation")?);
        if numer.is_null() || denom.is_null() {
            return Err(Fail::Null("numer/denom"));
        }
        if x.x.m() != p.p.m {
            return Err(Error::Argument("instance and presentation disagree on m".into()).into());
        }
        let l = x.x.local_defect(&p.e)?.local_defect;
        *numer = *l.numer();
        *denom = *l.denom();
        Ok(())
    })
}

/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_is_solution(x: *const PsActionSpace, p: *const PsPresentation, out: *mut bool) -> PsStatus {
    guard(|| {
        let (x, p) = (deref(x, "space")?, deref(p, "presentation")?);
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        if x.x.m() != p.p.m {
            return Err(Error::Argument("instance and presentation disagree on m".into()).into());
        }
        *out = x.x.is_solution(&p.e)?;
        Ok(())
    })
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RepairOptions {
    #[serde(default)]
    mode: Mode,
    #[serde(rename = "C_d")]
    c_d: Option<String>,
    #[serde(rename = "t_E")]
    t_e: Option<String>,
    #[serde(rename = "C_Box")]
    c_box: Option<String>,
    h: Option<String>,
    delta: Option<String>,
    budget_points: Option<u64>,
}

/// Repairs `x` to an exact solution. `options_json` may be null or hold
/// `mode`, `C_d`, `t_E`, `C_Box`, `h`, `delta` (rationals as strings) and
/// `budget_points`. Writes the repaired action and the JSON report.
///
/// # Safety
/// Handles must be live, `options_json` null or NUL-terminated, outputs
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ps_repair(
    x: *const PsActionSpace,
    p: *const PsPresentation,
    options_json: *const c_char,
    out_space: *mut *mut PsActionSpace,
    out_report: *mut *mut c_char,
) -> PsStatus {
    guard(|| {
        let (x, p) = (deref(x, "space")?, deref(p, "presentation")?);
        if out_space.is_null() || out_report.is_null() {
            return Err(Fail::Null("outputs"));
        }
        let opts: RepairOptions = if options_json.is_null() {
            RepairOptions::default()
        } else {
            serde_json::from_str(str_arg(options_json, "options_json")?).map_err(Error::from)?
        };
        let parse = |s: &Option<String>| s.as_deref().map(parse_big_rational).transpose();
        let overrides = ConstantOverrides { c_d: parse(&opts.c_d)?, t_e: parse(&opts.t_e)?, c_box: parse(&opts.c_box)?, h: parse(&opts.h)? };
        let constants = Constants::for_mode(&p.p, opts.mode, &overrides)?;
        let budget = opts.budget_points.unwrap_or_else(|| permstab::config::Budget::default().points);
        let r = repair(&x.x, &p.p, &p.e, &constants, parse(&opts.delta)?, budget)?;
        let report = serde_json::to_string(&r.report).map_err(Error::from)?;
        let c = CString::new(report).map_err(|_| Fail::Utf8)?;
        *out_space = Box::into_raw(Box::new(PsActionSpace { x: r.psi }));
        *out_report = c.into_raw();
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
