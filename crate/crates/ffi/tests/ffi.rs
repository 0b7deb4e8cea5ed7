use std::ffi::{c_char, CStr, CString};
use std::ptr;

use apedit::model::{save_checkpoint, Model, ModelConfig, ModelVocabs};
use apedit::vocab::{Vocab, VocabKind};
use apedit_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    apedit_string_free(p);
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(apedit_last_error()).to_str().unwrap().to_owned() }
}

#[test]
fn extract_then_apply() {
    let (mt, pe) = (c("The cats is grey"), c("The cat is grey ."));
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(apedit_extract_ops(mt.as_ptr(), pe.as_ptr(), &mut out), ApeditStatus::Ok);
        let ops = take(out);
        let ops_c = c(&ops);
        assert_eq!(apedit_apply_ops(mt.as_ptr(), ops_c.as_ptr(), &mut out), ApeditStatus::Ok);
        assert_eq!(take(out), "The cat is grey .");
    }
}

#[test]
fn errors_are_reported() {
    let mt = c("a b");
    let mut out = ptr::null_mut();
    unsafe {
        let bad = c("KEEP FROB");
        assert_eq!(apedit_apply_ops(mt.as_ptr(), bad.as_ptr(), &mut out), ApeditStatus::Parse);
        assert!(!last_error().is_empty());
        let over = c("KEEP KEEP KEEP");
        assert_eq!(apedit_apply_ops(mt.as_ptr(), over.as_ptr(), &mut out), ApeditStatus::Overrun);
        assert_eq!(apedit_extract_ops(ptr::null(), mt.as_ptr(), &mut out), ApeditStatus::NullArgument);
        let invalid = [0xffu8, 0];
        assert_eq!(
            apedit_extract_ops(invalid.as_ptr().cast(), mt.as_ptr(), &mut out),
            ApeditStatus::InvalidUtf8
        );
        assert_eq!(apedit_extract_ops(mt.as_ptr(), mt.as_ptr(), ptr::null_mut()), ApeditStatus::NullArgument);
        let mut t = 0.0;
        assert_eq!(apedit_ter(mt.as_ptr(), mt.as_ptr(), true, &mut t), ApeditStatus::Ok);
        assert!(last_error().is_empty());
        apedit_string_free(ptr::null_mut());
        apedit_model_free(ptr::null_mut());
    }
}

#[test]
fn ter_shift_example() {
    let (h, r) = (c("c a b"), c("a b c"));
    let mut t = -1.0;
    unsafe {
        assert_eq!(apedit_ter(h.as_ptr(), r.as_ptr(), true, &mut t), ApeditStatus::Ok);
        assert!((t - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(apedit_ter(h.as_ptr(), r.as_ptr(), false, &mut t), ApeditStatus::Ok);
        assert!((t - 2.0 / 3.0).abs() < 1e-12);
    }
}

fn vocab(kind: VocabKind, extra: &[&str]) -> Vocab {
    let mut symbols: Vec<String> = kind.reserved().iter().map(|s| s.to_string()).collect();
    symbols.extend(extra.iter().map(|s| s.to_string()));
    Vocab::from_symbols(kind, symbols).unwrap()
}

#[test]
fn model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let vocabs = ModelVocabs {
        src: None,
        input: vocab(VocabKind::Words, &["a", "b"]),
        output: vocab(VocabKind::Ops, &["INS|a"]),
    };
    let model = Model::<f32>::new(ModelConfig::mono_forced().with_sizes(4, 4), vocabs).unwrap();
    save_checkpoint(&model, &path).unwrap();

    let p = c(path.to_str().unwrap());
    let mt = c("a b zzz");
    unsafe {
        let mut handle = ptr::null_mut();
        assert_eq!(apedit_model_load(p.as_ptr(), &mut handle), ApeditStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(apedit_model_post_edit(handle, ptr::null(), mt.as_ptr(), 5, &mut out), ApeditStatus::Ok);
        let pe = take(out);
        assert!(pe.split_whitespace().count() <= 3 + 5, "{pe}");
        apedit_model_free(handle);

        let missing = c(dir.path().join("none.ckpt").to_str().unwrap());
        assert_eq!(apedit_model_load(missing.as_ptr(), &mut handle), ApeditStatus::Io);
        assert_eq!(apedit_model_post_edit(ptr::null(), ptr::null(), mt.as_ptr(), 5, &mut out), ApeditStatus::NullArgument);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/apedit.h")).unwrap();
    for f in [
        "apedit_last_error", "apedit_version", "apedit_string_free", "apedit_extract_ops", "apedit_apply_ops",
        "apedit_ter", "apedit_model_load", "apedit_model_free", "apedit_model_post_edit",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing");
    }
    assert!(header.contains("typedef struct ApeditModel ApeditModel"));
    let v = unsafe { CStr::from_ptr(apedit_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
