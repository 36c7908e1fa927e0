use std::path::Path;
use std::process::{Command, Output};

fn mctrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mctrack")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = mctrack(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_train_track_eval_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (train, test, model) = (d.join("train"), d.join("test"), d.join("model.txt"));
    ok(&["synth", "--seed", "1", "--frames", "60", "--out", p(&train)]);
    ok(&["synth", "--seed", "2", "--frames", "60", "--out", p(&test)]);
    ok(&["train", "--seq", p(&train), "--out", p(&model)]);
    for name in ["a.txt", "b.txt"] {
        ok(&["track", "--seq", p(&test), "--model", p(&model), "--out", p(&d.join(name)), "--seed", "3"]);
    }
    let a = std::fs::read(d.join("a.txt")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(d.join("b.txt")).unwrap());

    let report = d.join("report.csv");
    let out = ok(&["eval", "--seq", p(&test), "--tracks", p(&d.join("a.txt")), "--out", p(&report), "--csv"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("MOTA"));
    assert!(std::fs::read_to_string(&report).unwrap().starts_with("mota,"));
}

#[test]
fn synth_output_depends_only_on_seed() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["x", "y"] {
        ok(&["synth", "--seed", "5", "--frames", "20", "--out", p(&dir.path().join(name))]);
    }
    for file in ["det/det.txt", "gt/gt.txt", "matches.txt", "seqinfo.ini"] {
        assert_eq!(
            std::fs::read(dir.path().join("x").join(file)).unwrap(),
            std::fs::read(dir.path().join("y").join(file)).unwrap()
        );
    }
}

#[test]
fn effective_config_is_dumped() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("s");
    ok(&["synth", "--seed", "1", "--frames", "30", "--out", p(&seq)]);
    let cfg = dir.path().join("cfg.txt");
    ok(&[
        "train", "--seq", p(&seq), "--out", p(&dir.path().join("m.txt")), "--tau-max", "4", "--scheme", "st",
        "--dump-config", p(&cfg),
    ]);
    let text = std::fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("tau_max = 4"));
    assert!(text.contains("scheme = st"));
    assert!(text.contains("min_cluster_size = 5"));
}

#[test]
fn errors_are_single_machine_readable_lines() {
    let out = mctrack(&["track", "--seq", "/nonexistent", "--model", "/nonexistent", "--out", "/tmp/x"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: kind=io msg=\""));

    let out = mctrack(&["track", "--scheme", "xx"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: kind=usage"));

    let out = mctrack(&["synth", "--out", "/tmp/never"]);
    assert!(!out.status.success(), "seed is mandatory");
}
