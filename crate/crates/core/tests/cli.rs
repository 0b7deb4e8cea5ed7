mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use apedit::datapipe::Triple;
use common::toy::toy_corpus;

fn apedit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apedit"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_corpus(dir: &Path, prefix: &str, triples: &[Triple]) {
    for (ext, side) in [("src", 0), ("mt", 1), ("pe", 2)] {
        let lines: Vec<String> = triples
            .iter()
            .map(|t| [&t.src, &t.mt, &t.pe][side].to_string())
            .collect();
        fs::write(dir.join(format!("{prefix}.{ext}")), lines.join("\n") + "\n").unwrap();
    }
}

fn tmp() -> (tempfile::TempDir, PathBuf) {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().to_path_buf();
    (d, p)
}

#[test]
fn extract_apply_round_trip() {
    let (_d, dir) = tmp();
    write_corpus(&dir, "toy", &toy_corpus(30, 1));
    fs::write(dir.join("odd.mt"), "a b  c\n\nx\n").unwrap();
    fs::write(dir.join("odd.pe"), "a c\ny\n\n").unwrap();
    for p in ["toy", "odd"] {
        let (mt, pe) = (format!("{p}.mt"), format!("{p}.pe"));
        ok(&apedit(&["extract-ops", "--mt", &mt, "--pe", &pe, "--out", "ops.txt"], &dir));
        ok(&apedit(&["apply-ops", "--mt", &mt, "--ops", "ops.txt", "--out", "back.txt"], &dir));
        if p == "toy" {
            assert_eq!(fs::read(dir.join("back.txt")).unwrap(), fs::read(dir.join(&pe)).unwrap());
        } else {
            assert_eq!(fs::read_to_string(dir.join("back.txt")).unwrap(), "a c\ny\n\n");
        }
    }
    let stats = ok(&apedit(&["stats", "--ops", "ops.txt"], &dir));
    assert!(stats.starts_with("total\t"));
}

#[test]
fn eval_and_errors() {
    let (_d, dir) = tmp();
    write_corpus(&dir, "toy", &toy_corpus(10, 1));
    let out = ok(&apedit(&["eval", "--hyp", "toy.pe", "--ref", "toy.pe"], &dir));
    assert_eq!(out.trim(), "TER 0.00 BLEU 100.00");
    let base = ok(&apedit(&["eval", "--hyp", "toy.mt", "--ref", "toy.pe"], &dir));
    assert!(base.starts_with("TER ") && !base.starts_with("TER 0.00"));

    let usage = apedit(&["eval", "--frobnicate"], &dir);
    assert_eq!(usage.status.code(), Some(2));
    let missing = apedit(&["eval", "--hyp", "none.txt", "--ref", "toy.pe"], &dir);
    assert_eq!(missing.status.code(), Some(1));
    let err = String::from_utf8(missing.stderr).unwrap();
    let last = err.lines().last().unwrap();
    assert!(last.starts_with("error: ") && last.contains("none.txt"), "{err}");
    fs::write(dir.join("short.pe"), "a\n").unwrap();
    assert_eq!(apedit(&["eval", "--hyp", "toy.mt", "--ref", "short.pe"], &dir).status.code(), Some(1));
    fs::write(dir.join("bad.ops"), "KEEP FLY\n").unwrap();
    fs::write(dir.join("one.mt"), "a\n").unwrap();
    let bad = apedit(&["apply-ops", "--mt", "one.mt", "--ops", "bad.ops"], &dir);
    assert_eq!(bad.status.code(), Some(1));
}

const TOY_CFG: &str = "\
# toy forced-attention run
model.preset = mono_forced
model.cell_size = 16
model.embedding_size = 16
train.batch_size = 8
train.decay_factor = 1.0
train.max_steps = 60
train.eval_every = 10
train.patience = none
data.train_mt = toy.mt
data.train_pe = toy.pe
data.dev_mt = toy.mt
data.dev_pe = toy.pe
data.out = model.ckpt
data.log = train.tsv
";

#[test]
fn train_decode_and_reproduce() {
    let (_d, dir) = tmp();
    write_corpus(&dir, "toy", &toy_corpus(24, 2));
    fs::write(dir.join("toy.cfg"), TOY_CFG).unwrap();
    let run = apedit(&["--seed", "3", "train", "--config", "toy.cfg"], &dir);
    ok(&run);
    let stderr = String::from_utf8(run.stderr).unwrap();
    assert!(stderr.contains("model.cell_size=16") && stderr.contains("train.seed=3"), "{stderr}");
    let log = fs::read_to_string(dir.join("train.tsv")).unwrap();
    let best: Vec<f64> = log
        .lines()
        .filter(|l| l.starts_with("eval\t"))
        .map(|l| l.split('\t').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(best.len(), 6);
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
    let first = fs::read(dir.join("model.ckpt")).unwrap();

    let out = ok(&apedit(
        &["decode", "--model", "model.ckpt", "--mt", "toy.mt", "--out", "hyp.txt", "--ops-out", "hyp.ops"],
        &dir,
    ));
    assert!(out.is_empty());
    assert_eq!(fs::read_to_string(dir.join("hyp.txt")).unwrap().lines().count(), 24);
    ok(&apedit(&["apply-ops", "--mt", "toy.mt", "--ops", "hyp.ops", "--out", "again.txt"], &dir));
    assert_eq!(fs::read(dir.join("again.txt")).unwrap(), fs::read(dir.join("hyp.txt")).unwrap());

    ok(&apedit(&["--seed", "3", "train", "--config", "toy.cfg", "--out", "second.ckpt", "--log", "second.tsv"], &dir));
    assert_eq!(fs::read(dir.join("second.ckpt")).unwrap(), first);
    ok(&apedit(&["--seed", "3", "--precision", "f64", "train", "--config", "toy.cfg", "--set", "train.max_steps=5", "--out", "f64.ckpt"], &dir));
    assert!(dir.join("f64.ckpt").exists());

    let bad = apedit(&["train", "--config", "toy.cfg", "--set", "model.colour=3"], &dir);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn data_tools() {
    let (_d, dir) = tmp();
    let triples = toy_corpus(40, 5);
    write_corpus(&dir, "real", &triples[..10]);
    write_corpus(&dir, "syn", &triples[10..]);
    ok(&apedit(&["lm-train", "--corpus", "real.pe", "--out", "lm.txt"], &dir));
    let sel = ok(&apedit(&["lm-select", "--lm", "lm.txt", "--input", "syn.pe", "--top-k", "5"], &dir));
    assert_eq!(sel.lines().count(), 5);
    fs::write(dir.join("raw.txt"), "ok this is fine .\nno\nSHOUTING IS NOT ALLOWED\n").unwrap();
    let kept = ok(&apedit(&["coarse-filter", "--input", "raw.txt"], &dir));
    assert_eq!(kept, "ok this is fine .\n");
    let all = ok(&apedit(&["coarse-filter", "--input", "raw.txt", "--no-rules"], &dir));
    assert_eq!(all.lines().count(), 3);
    ok(&apedit(&["--seed", "4", "filter-ter", "--real", "real", "--synthetic", "syn", "--out", "sel", "--target-size", "12"], &dir));
    assert_eq!(fs::read_to_string(dir.join("sel.pe")).unwrap().lines().count(), 12);
    let too_many = apedit(&["filter-ter", "--real", "real", "--synthetic", "syn", "--out", "x", "--target-size", "31"], &dir);
    assert_eq!(too_many.status.code(), Some(1));
    let vocab = ok(&apedit(&["build-vocab", "--input", "real.pe", "syn.pe", "--limit", "10"], &dir));
    let back = apedit::vocab::Vocab::read_from(vocab.as_bytes()).unwrap();
    assert_eq!(back.len(), 10);
    assert_eq!(vocab.lines().count(), 11);
}

#[test]
fn grad_check_command() {
    let (_d, dir) = tmp();
    for arch in ["mono-global", "mono-forced", "chained"] {
        let out = ok(&apedit(&["grad-check", "--arch", arch], &dir));
        assert!(out.trim_end().ends_with("ok"), "{out}");
    }
}
