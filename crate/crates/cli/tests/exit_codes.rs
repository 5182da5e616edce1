mod common;

use common::*;
use std::fs;

#[test]
fn default_config_splits_62_26() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/default.toml");
    ok(dir.path(), &["simulate", "--config", cfg.to_str().unwrap(), "--out", "corpus"]);
    let count = |split: &str| {
        fs::read_dir(dir.path().join("corpus").join(split))
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".trace.jsonl"))
            .count()
    };
    assert_eq!((count("train"), count("test")), (62, 26));
}

#[test]
fn zero_duration_script_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "seed = 1\nobject_count = 2\n\n[[events]]\nkind = \"NoCommunication\"\nduration = 0\n",
    )
    .unwrap();
    fs::write(dir.path().join("run.toml"), "[simulate]\nscenarios = [\"bad.toml\"]\n").unwrap();
    let (code, _) = run_in(dir.path(), &["simulate", "--config", "run.toml", "--out", "out"]);
    assert_eq!(code, 2);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_exits_2_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[simulate.corpus]\ntrain = 2\nbogus = 1\n").unwrap();
    let (code, out) = run_in(dir.path(), &["simulate", "--config", "run.toml", "--out", "out"]);
    assert_eq!(code, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    assert!(!dir.path().join("out").exists());
    let (code, _) = run_in(dir.path(), &["simulate", "--config", "missing.toml"]);
    assert_eq!(code, 2);
    let (code, _) = run_in(dir.path(), &["simulate", "--jobs", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn missing_model_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("small.toml"), dir.path().join("small.toml")).unwrap();
    ok(dir.path(), &["simulate", "--config", "small.toml", "--out", "out"]);
    let (code, _) = run_in(dir.path(), &["parse", "--config", "small.toml", "--out", "p"]);
    assert_eq!(code, 4);
    fs::write(dir.path().join("out/model.json"), "{\"schema\": 1}").unwrap();
    let (code, _) = run_in(dir.path(), &["keyframes", "--config", "small.toml", "--out", "k"]);
    assert_eq!(code, 4);
}

#[test]
fn corpus_without_joint_attention_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut names = Vec::new();
    for (i, kinds) in [["NoCommunication", "AttentionFollowing"], ["AttentionFollowing", "NoCommunication"]]
        .iter()
        .enumerate()
    {
        let mut s = format!("seed = {i}\nobject_count = 3\n");
        for k in kinds {
            s.push_str(&format!("\n[[events]]\nkind = \"{k}\"\nduration = 60\n"));
        }
        let name = format!("s{i}.toml");
        fs::write(dir.path().join(&name), s).unwrap();
        names.push(format!("{name:?}"));
    }
    let cfg = format!("[simulate]\nscenarios = [{}]\n\n[train]\ncorpus = \"c\"\n", names.join(", "));
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    ok(dir.path(), &["simulate", "--config", "run.toml", "--out", "c"]);
    let (code, out) = run_in(dir.path(), &["train", "--config", "run.toml", "--out", "m"]);
    assert_eq!(code, 3, "{}", String::from_utf8_lossy(&out.stderr));
    let (code, _) = run_in(dir.path(), &["train", "--config", "run.toml", "--out", "m", "--seed", "1"]);
    assert_eq!(code, 3);
}

#[test]
fn missing_corpus_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[train]\ncorpus = \"nowhere\"\n").unwrap();
    let (code, _) = run_in(dir.path(), &["train", "--config", "run.toml"]);
    assert_eq!(code, 3);
}

#[test]
fn perfect_predictions_score_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("small.toml"), dir.path().join("small.toml")).unwrap();
    ok(dir.path(), &["simulate", "--config", "small.toml", "--out", "out"]);
    fs::create_dir(dir.path().join("out/parsed")).unwrap();
    for e in fs::read_dir(dir.path().join("out/test")).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix(".truth.jsonl") {
            fs::copy(&p, dir.path().join(format!("out/parsed/{id}.beliefs.jsonl"))).unwrap();
        }
    }
    ok(dir.path(), &["eval", "--config", "small.toml", "--out", "e"]);
    let report = fs::read_to_string(dir.path().join("e/report.txt")).unwrap();
    let ours: Vec<&str> = report.lines().filter(|l| l.starts_with("ours")).collect();
    assert_eq!(ours.len(), 2);
    for l in ours {
        assert!(l.split_whitespace().skip(1).all(|v| v == "1.000"), "{l}");
    }
    let chance = report.lines().find(|l| l.starts_with("chance")).unwrap();
    let avg: f64 = chance.split_whitespace().last().unwrap().parse().unwrap();
    assert!((avg - 0.25).abs() < 0.02);
}

#[test]
fn singleton_grid_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(data("small.toml")).unwrap();
    let cfg = base
        .replace("theta1_values = [0.5, 2.0]", "theta1_values = [1.0]")
        .replace("theta2_values = [0.1, 1.0]", "theta2_values = [1.0]");
    fs::write(dir.path().join("small.toml"), cfg).unwrap();
    ok(dir.path(), &["simulate", "--config", "small.toml", "--out", "out"]);
    ok(dir.path(), &["train", "--config", "small.toml", "--out", "out"]);
    let report = fs::read_to_string(dir.path().join("out/train_report.toml")).unwrap();
    assert!(report.contains("theta1_candidates = 1\n"));
    assert!(report.contains("theta2_candidates = 1\n"));
    let values: Vec<&str> = report
        .lines()
        .filter(|l| l.contains(" = ") && !l.starts_with("traces") && !l.starts_with("frames"))
        .filter(|l| !l.starts_with("tau") && !l.starts_with("theta") && !l.starts_with('l'))
        .collect();
    assert_eq!(values.len(), 9);
    assert!(values.iter().all(|l| l.ends_with("= 1.0")), "{values:?}");
}
