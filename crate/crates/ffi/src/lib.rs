//! C ABI over the post-editing toolkit.
//!
//! Strings are NUL-terminated UTF-8. Strings returned through `out`
//! parameters are owned by the caller and released with
//! `apedit_string_free`. On any status other than `APEDIT_STATUS_OK`,
//! `apedit_last_error` describes the failure for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use apedit::editops::{apply_ops, extract_ops, EditScript, Sentence};
use apedit::infer::decode_ops_traced;
use apedit::metrics::ter_sentence;
use apedit::model::{load_checkpoint, Model, ModelError};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApeditStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Overrun = 4,
    Io = 5,
    Model = 6,
    Panic = 7,
}

/// A loaded post-editing model.
pub struct ApeditModel {
    inner: Model<f32>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(ApeditStatus, String);

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ApeditStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ApeditStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ApeditStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(ApeditStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(ApeditStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(ApeditStatus::NullArgument, "out is null".into()));
    }
    let c = CString::new(s).map_err(|e| Failure(ApeditStatus::InvalidUtf8, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn model_failure(e: ModelError) -> Failure {
    let status = match e {
        ModelError::Io(_) => ApeditStatus::Io,
        ModelError::Overrun(_) => ApeditStatus::Overrun,
        _ => ApeditStatus::Model,
    };
    Failure(status, e.to_string())
}

/// Description of the last failure on this thread; empty after success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn apedit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn apedit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn apedit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Minimal edit script turning `mt` into `pe`, space-separated.
///
/// # Safety
/// `mt` and `pe` must be valid C strings and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn apedit_extract_ops(mt: *const c_char, pe: *const c_char, out: *mut *mut c_char) -> ApeditStatus {
    guard(|| {
        let (mt, pe) = (text(mt, "mt")?, text(pe, "pe")?);
        put_string(out, extract_ops(&Sentence::parse(mt), &Sentence::parse(pe)).to_string())
    })
}

/// Applies a space-separated edit script to `mt`.
///
/// # Safety
/// `mt` and `ops` must be valid C strings and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn apedit_apply_ops(mt: *const c_char, ops: *const c_char, out: *mut *mut c_char) -> ApeditStatus {
    guard(|| {
        let (mt, ops) = (text(mt, "mt")?, text(ops, "ops")?);
        let script: EditScript = ops.parse().map_err(|e: apedit::editops::ScriptError| Failure(ApeditStatus::Parse, e.to_string()))?;
        let pe = apply_ops(&Sentence::parse(mt), &script).map_err(|e| Failure(ApeditStatus::Overrun, e.to_string()))?;
        put_string(out, pe.to_string())
    })
}

/// Sentence TER of `hyp` against `reference`, as a fraction.
///
/// # Safety
/// `hyp` and `reference` must be valid C strings and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn apedit_ter(hyp: *const c_char, reference: *const c_char, use_shifts: bool, out: *mut f64) -> ApeditStatus {
    guard(|| {
        let (h, r) = (text(hyp, "hyp")?, text(reference, "reference")?);
        if out.is_null() {
            return Err(Failure(ApeditStatus::NullArgument, "out is null".into()));
        }
        *out = ter_sentence(&Sentence::parse(h), &Sentence::parse(r), use_shifts).ter;
        Ok(())
    })
}

/// Loads a checkpoint. The handle is released with `apedit_model_free`.
///
/// # Safety
/// `path` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn apedit_model_load(path: *const c_char, out: *mut *mut ApeditModel) -> ApeditStatus {
    guard(|| {
        let path = text(path, "path")?;
        if out.is_null() {
            return Err(Failure(ApeditStatus::NullArgument, "out is null".into()));
        }
        let inner = load_checkpoint(Path::new(path)).map_err(model_failure)?;
        *out = Box::into_raw(Box::new(ApeditModel { inner }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from `apedit_model_load` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn apedit_model_free(model: *mut ApeditModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Post-edits one MT sentence. `src` may be null except for chained models.
///
/// # Safety
/// `model` must be a live handle, `mt` (and `src` unless null) valid C
/// strings and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn apedit_model_post_edit(
    model: *const ApeditModel,
    src: *const c_char,
    mt: *const c_char,
    max_extra: usize,
    out: *mut *mut c_char,
) -> ApeditStatus {
    guard(|| {
        let model = model
            .as_ref()
            .ok_or_else(|| Failure(ApeditStatus::NullArgument, "model is null".into()))?;
        let mt = Sentence::parse(text(mt, "mt")?);
        let src = if src.is_null() {
            None
        } else {
            Some(Sentence::parse(text(src, "src")?))
        };
        let decoded = decode_ops_traced(&model.inner, src.as_ref(), &mt, max_extra).map_err(model_failure)?;
        put_string(out, decoded.output.to_string())
    })
}
