use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgn-social"))
        .args(args)
        .env("TGN_SOCIAL_THREADS", "1")
        .output()
        .expect("spawn")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Tiny corpus and model; returns the config path.
fn setup(root: &Path) -> PathBuf {
    let cfg = serde_json::json!({
        "seed": 2,
        "corpus_dir": root.join("corpus"),
        "run_dir": root.join("run"),
        "generate": {"count_per_template": 2},
        "train": {
            "max_epochs": 2,
            "phase2_max_epochs": 2,
            "model": {"d_memory": 4, "d_time": 4, "d_embed": 4, "head_dim": 2, "d_hidden": 4}
        },
        "ablation": {"max_epochs": 1}
    });
    let path = root.join("config.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let mut args = vec!["generate", "--config", path.to_str().unwrap()];
    let sets: Vec<String> = (0..8)
        .map(|i| format!("generate.templates.{i}.duration_s=20"))
        .collect();
    for s in &sets {
        args.push("--set");
        args.push(s);
    }
    ok(&args);
    // Later commands read the corpus from disk; durations only matter here.
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let other = dir.path().join("again");
    let sets: Vec<String> = (0..8)
        .map(|i| format!("generate.templates.{i}.duration_s=20"))
        .collect();
    let mut args = vec!["generate", "--config", s(&cfg), "--out", s(&other)];
    for x in &sets {
        args.push("--set");
        args.push(x);
    }
    ok(&args);
    let mut names: Vec<_> = fs::read_dir(&other).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 33);
    for n in names {
        assert_eq!(
            fs::read(dir.path().join("corpus").join(&n)).unwrap(),
            fs::read(other.join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn train_eval_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let run_dir = dir.path().join("p1");
    ok(&["train", "--config", s(&cfg), "--out", s(&run_dir), "--phase", "1"]);
    assert!(run_dir.join("phase1.ckpt").exists());
    assert!(!run_dir.join("phase2.ckpt").exists());

    // The resolved copy holds every default, not only the keys we set.
    let resolved: Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("config.resolved.json")).unwrap())
            .unwrap();
    assert_eq!(resolved["train"]["lr"], 0.001);
    assert_eq!(resolved["train"]["model"]["heads"], 2);
    assert_eq!(resolved["run_dir"], s(&run_dir));
    let split: Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("split.json")).unwrap()).unwrap();
    assert_eq!(split["test"].as_array().unwrap().len(), 8);

    ok(&["train", "--config", s(&cfg), "--out", s(&run_dir), "--phase", "2"]);
    assert!(run_dir.join("phase2.ckpt").exists());
    let log = fs::read_to_string(run_dir.join("log.jsonl")).unwrap();
    let phases: Vec<u64> = log
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["phase"].as_u64().unwrap())
        .collect();
    assert!(phases.contains(&1) && phases.contains(&2));

    let ckpt = fs::read(run_dir.join("phase2.ckpt")).unwrap();
    ok(&["eval", "--out", s(&run_dir)]);
    let metrics = fs::read_to_string(run_dir.join("metrics.json")).unwrap();
    ok(&["eval", "--out", s(&run_dir)]);
    assert_eq!(fs::read_to_string(run_dir.join("metrics.json")).unwrap(), metrics);
    assert_eq!(fs::read(run_dir.join("phase2.ckpt")).unwrap(), ckpt);
    let m: Value = serde_json::from_str(&metrics).unwrap();
    for task in ["next_gaze", "next_speaker"] {
        for who in ["model", "baseline"] {
            let f = m[task][who]["f1"].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&f));
        }
        let d = m[task]["delta"]["f1"].as_f64().unwrap();
        let diff = m[task]["model"]["f1"].as_f64().unwrap() - m[task]["baseline"]["f1"].as_f64().unwrap();
        assert_eq!(d, diff);
    }
    assert_eq!(m["gaze_queries_include_empty_targets"], true);
    assert_eq!(m["sessions"].as_array().unwrap().len(), 8);
}

#[test]
fn ablate_runs_the_requested_variants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let out = dir.path().join("abl");
    ok(&["ablate", "--config", s(&cfg), "--out", s(&out), "--variants", "TGN-attn,TGN-id"]);
    let csv = fs::read_to_string(out.join("ablation.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "variant,f1,acc,sec_per_epoch");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("TGN-attn,") && lines[2].starts_with("TGN-id,"));
}

#[test]
fn external_vectors_equal_to_one_hot_reproduce_the_one_hot_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let msg = dir.path().join("messages");
    ok(&["encode-dump", "--config", s(&cfg), "--out", s(&msg)]);
    assert_eq!(fs::read_dir(&msg).unwrap().count(), 16);
    let ext = format!("encodings.external_messages_dir={}", s(&msg));
    let out = dir.path().join("enc");
    ok(&["compare-encodings", "--config", s(&cfg), "--out", s(&out), "--set", &ext]);
    let csv = fs::read_to_string(out.join("encoding_table.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!((r[2], r[3]), (r[4], r[5]), "{r:?}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    let code = |args: &[&str]| run(args).status.code();

    // Config and validation errors.
    assert_eq!(code(&["train", "--set", "train.lrr=1"]), Some(2));
    assert_eq!(code(&["train", "--set", "train.patience=0"]), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"seed\": \"x\"}").unwrap();
    assert_eq!(code(&["train", "--config", s(&bad)]), Some(2));

    // I/O errors.
    assert_eq!(code(&["train", "--config", s(&missing)]), Some(3));
    let corpus = format!("corpus_dir={}", s(&missing));
    assert_eq!(code(&["eval", "--set", &corpus, "--out", s(&missing)]), Some(3));

    // Unknown variant after a valid corpus.
    let cfg = setup(dir.path());
    assert_eq!(code(&["ablate", "--config", s(&cfg), "--variants", "TGN-x"]), Some(2));

    // Corrupt event log names the line.
    let events = dir.path().join("corpus/S01.events.jsonl");
    let mut text = fs::read_to_string(&events).unwrap();
    text.push_str("{\"t\": 0, \"src\": 99, \"dst\": 1, \"speaking\": []}\n");
    fs::write(&events, text).unwrap();
    let out = run(&["train", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}
