// SPDX-License-Identifier: Apache-2.0

//! C ABI over `rtlseek`.
//!
//! Every fallible function returns an [`RtlStatus`] and writes its result
//! through an out-pointer. On failure, [`rtlseek_last_error`] describes the
//! most recent error raised on the calling thread. Strings returned through
//! out-pointers are owned by the caller and released with
//! [`rtlseek_string_free`]; handles are released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rtlseek::canon::canonicalize;
use rtlseek::grpo::{self, GroupBatch, GrpoConfig};
use rtlseek::metrics;
use rtlseek::reward::{self, HistoryWindow, Stage, StageConfig, Verification};
use rtlseek::sim::VectorSuite;
use rtlseek::verilog::{self, SyntaxTree};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    InvalidArgument = 4,
    Panic = 5,
}

/// Parsed Verilog design.
pub struct RtlTree {
    tree: SyntaxTree,
}

/// Sliding window of recent reasoning lengths.
pub struct RtlHistory {
    window: HistoryWindow,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(text).expect("interior NULs removed")));
}

fn fail(status: RtlStatus, message: impl Into<String>) -> RtlStatus {
    set_error(message);
    status
}

/// Runs `f`, converting panics into [`RtlStatus::Panic`] and clearing the
/// error slot on success.
fn guard(f: impl FnOnce() -> RtlStatus) -> RtlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(RtlStatus::Ok) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RtlStatus::Ok
        }
        Ok(status) => status,
        Err(_) => fail(RtlStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, RtlStatus> {
    if p.is_null() {
        return Err(fail(RtlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RtlStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], RtlStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(RtlStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn out_string(out: *mut *mut c_char, s: String) -> RtlStatus {
    let c = CString::new(s.replace('\0', " ")).expect("interior NULs removed");
    unsafe { *out = c.into_raw() };
    RtlStatus::Ok
}

macro_rules! nonnull {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(RtlStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rtlseek_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rtlseek_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `source`. A syntax, resolution or unsupported-construct error
/// yields [`RtlStatus::Syntax`].
///
/// # Safety
/// `source` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_parse(source: *const c_char, out: *mut *mut RtlTree) -> RtlStatus {
    guard(|| {
        nonnull!(out);
        let src = tri!(text(source, "source"));
        match verilog::parse_source(src) {
            Ok(tree) => {
                *out = Box::into_raw(Box::new(RtlTree { tree }));
                RtlStatus::Ok
            }
            Err(e) => fail(RtlStatus::Syntax, format!("{} error at {}: {e}", e.stage(), e.span())),
        }
    })
}

/// Releases a tree. NULL is ignored.
///
/// # Safety
/// `tree` must come from [`rtlseek_parse`] and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_tree_free(tree: *mut RtlTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Serializes a tree as ast/1 JSON.
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_tree_to_json(tree: *const RtlTree, out: *mut *mut c_char) -> RtlStatus {
    guard(|| {
        nonnull!(tree, out);
        out_string(out, verilog::node::to_json(&(*tree).tree))
    })
}

/// Hex SHA-256 digest of the canonical form.
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_tree_digest(tree: *const RtlTree, out: *mut *mut c_char) -> RtlStatus {
    guard(|| {
        nonnull!(tree, out);
        out_string(out, canonicalize(&(*tree).tree).digest.to_string())
    })
}

/// Structural equivalence of two trees.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_equivalent(a: *const RtlTree, b: *const RtlTree, out: *mut bool) -> RtlStatus {
    guard(|| {
        nonnull!(a, b, out);
        *out = canonicalize(&(*a).tree) == canonicalize(&(*b).tree);
        RtlStatus::Ok
    })
}

/// Empty history window.
#[no_mangle]
pub extern "C" fn rtlseek_history_new() -> *mut RtlHistory {
    Box::into_raw(Box::new(RtlHistory {
        window: HistoryWindow::new(),
    }))
}

/// Releases a history window. NULL is ignored.
///
/// # Safety
/// `history` must come from [`rtlseek_history_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_history_free(history: *mut RtlHistory) {
    if !history.is_null() {
        drop(Box::from_raw(history));
    }
}

/// Number of lengths currently held.
///
/// # Safety
/// `history` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn rtlseek_history_len(history: *const RtlHistory) -> usize {
    history.as_ref().map_or(0, |h| h.window.len())
}

/// Scores one response and writes the reward/1 JSON breakdown.
///
/// `stage` is 2 or 3. `vectors_json` is an optional tv/1 suite and `top` an
/// optional top-module name; both may be NULL. A non-NULL `history` receives
/// the response's reasoning length.
///
/// # Safety
/// String arguments must be NUL-terminated or NULL where allowed; handles
/// must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_score(
    response: *const c_char,
    stage: u8,
    vectors_json: *const c_char,
    top: *const c_char,
    history: *mut RtlHistory,
    out: *mut *mut c_char,
) -> RtlStatus {
    guard(|| {
        nonnull!(out);
        let raw = tri!(text(response, "response"));
        let stage = match stage {
            2 => Stage::Two,
            3 => Stage::Three,
            s => return fail(RtlStatus::InvalidArgument, format!("stage must be 2 or 3, got {s}")),
        };
        let verification = if vectors_json.is_null() {
            Verification::None
        } else {
            let suite = match VectorSuite::from_json(tri!(text(vectors_json, "vectors_json"))) {
                Ok(s) => s,
                Err(e) => return fail(RtlStatus::InvalidArgument, e.to_string()),
            };
            let top = if top.is_null() {
                None
            } else {
                Some(tri!(text(top, "top")).to_string())
            };
            Verification::Vectors { suite, top }
        };
        let mut scratch = HistoryWindow::new();
        let window = match history.as_mut() {
            Some(h) => &mut h.window,
            None => &mut scratch,
        };
        let breakdown = reward::score(raw, &StageConfig::preset(stage), &verification, window);
        out_string(out, breakdown.to_json())
    })
}

/// Unbiased pass@k for `c` correct out of `n` samples.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_pass_at_k(n: usize, c: usize, k: usize, out: *mut f64) -> RtlStatus {
    guard(|| {
        nonnull!(out);
        match metrics::pass_at_k(n, c, k) {
            Ok(v) => {
                *out = v;
                RtlStatus::Ok
            }
            Err(e) => fail(RtlStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Group-normalized advantages of `len` rewards, written to `out[0..len]`.
///
/// # Safety
/// `rewards` and `out` must point to `len` readable/writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_advantages(rewards: *const f64, len: usize, eps: f64, out: *mut f64) -> RtlStatus {
    guard(|| {
        let r = tri!(slice(rewards, len, "rewards"));
        if len > 0 {
            nonnull!(out);
        }
        if !(eps > 0.0 && eps.is_finite()) || r.iter().any(|x| !x.is_finite()) {
            return fail(RtlStatus::InvalidArgument, "eps must be positive and rewards finite");
        }
        for (i, a) in grpo::advantages(r, eps).into_iter().enumerate() {
            *out.add(i) = a;
        }
        RtlStatus::Ok
    })
}

/// Clipped-surrogate objective with a k3 penalty for one group of `len`
/// outputs. Advantages are computed from `rewards` with eps 1e-8.
///
/// # Safety
/// Each array must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtlseek_objective(
    rewards: *const f64,
    logprob_current: *const f64,
    logprob_old: *const f64,
    logprob_ref: *const f64,
    len: usize,
    clip_eps: f64,
    beta: f64,
    out: *mut f64,
) -> RtlStatus {
    guard(|| {
        nonnull!(out);
        let rewards = tri!(slice(rewards, len, "rewards")).to_vec();
        let config = GrpoConfig {
            group_size: len.max(2),
            clip_eps,
            beta,
            ..GrpoConfig::default()
        };
        if let Err(e) = config.validate() {
            return fail(RtlStatus::InvalidArgument, e.to_string());
        }
        let batch = GroupBatch {
            advantages: grpo::advantages(&rewards, config.adv_eps),
            rewards,
            logprob_current: tri!(slice(logprob_current, len, "logprob_current")).to_vec(),
            logprob_old: tri!(slice(logprob_old, len, "logprob_old")).to_vec(),
            logprob_ref: tri!(slice(logprob_ref, len, "logprob_ref")).to_vec(),
        };
        match grpo::objective(&batch, &config) {
            Ok(v) => {
                *out = v;
                RtlStatus::Ok
            }
            Err(e) => fail(RtlStatus::InvalidArgument, e.to_string()),
        }
    })
}
