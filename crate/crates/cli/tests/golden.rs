mod common;

use common::*;

#[test]
fn pipeline_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path(), "2");
    let out = dir.path().join("out");
    let read = |p: &str| std::fs::read_to_string(out.join(p)).unwrap();
    golden("train_report.toml", &read("train_report.toml"));
    golden("report.txt", &read("eval/report.txt"));
    golden("000.parse.txt", &read("parsed/000.parse.txt"));
    golden("000.keyframes.txt", &read("keyframes/000.keyframes.txt"));
    golden("digests.txt", &digest_listing(dir.path()));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_pipeline(a.path(), "1");
    small_pipeline(b.path(), "3");
    assert_eq!(digests(a.path()), digests(b.path()));
}

#[test]
fn demo_trace_parse_matches_golden_dump() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path(), "2");
    let scenario = repo().join("configs/demo/false_belief_first_order.toml");
    let cfg = format!(
        "[simulate]\nscenarios = [{:?}]\n\n[parse]\nmodel = \"out/model.json\"\ntraces = \"demo\"\n",
        scenario.to_string_lossy()
    );
    std::fs::write(dir.path().join("demo.toml"), cfg).unwrap();
    ok(dir.path(), &["simulate", "--config", "demo.toml", "--out", "demo"]);
    ok(dir.path(), &["parse", "--config", "demo.toml", "--out", "demo-parsed"]);
    let dump = std::fs::read_to_string(dir.path().join("demo-parsed/false_belief_first_order.parse.txt")).unwrap();
    golden("false_belief_first_order.parse.txt", &dump);
}

#[test]
fn seed_override_changes_the_corpus_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("small.toml"), dir.path().join("small.toml")).unwrap();
    for (out, seed) in [("a", "9"), ("b", "9"), ("c", "10")] {
        ok(dir.path(), &["simulate", "--config", "small.toml", "--seed", seed, "--out", out]);
    }
    let d = |o: &str| digests(&dir.path().join(o));
    assert_eq!(d("a"), d("b"));
    assert_ne!(d("a"), d("c"));
}
