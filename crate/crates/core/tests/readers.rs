use fmp_core::features::decode_feature_dump;
use fmp_core::parser::{read_belief_output, read_model, write_model};
use fmp_core::segments::{read_segment_list, write_segment_list};
use fmp_core::world::{read_ground_truth, read_trace, write_ground_truth, write_trace, ScenarioSpec};
use proptest::prelude::*;
use std::path::{Path, PathBuf};

fn seeds(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut v: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    assert!(!v.is_empty(), "no seeds for {target}");
    v
}

fn text(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn seed_corpus_is_valid_and_round_trips() {
    for p in seeds("trace") {
        let t = read_trace(&text(&p)).unwrap();
        assert_eq!(read_trace(&write_trace(&t)).unwrap(), t);
    }
    for p in seeds("ground_truth") {
        let g = read_ground_truth(&text(&p)).unwrap();
        assert_eq!(write_ground_truth(&g), text(&p));
    }
    for p in seeds("scenario") {
        let s = ScenarioSpec::from_toml(&text(&p)).unwrap();
        assert_eq!(ScenarioSpec::from_toml(&s.to_toml()).unwrap(), s);
    }
    for p in seeds("model") {
        let m = read_model(&text(&p)).unwrap();
        assert_eq!(write_model(&m).unwrap(), text(&p));
    }
    for p in seeds("feature_dump") {
        let d = decode_feature_dump(&std::fs::read(&p).unwrap()).unwrap();
        assert_eq!(d.values.len(), d.rows * d.cols);
    }
    for p in seeds("belief_output") {
        let (events, deltas) = read_belief_output(&text(&p)).unwrap();
        assert!(deltas.is_legal());
        assert_eq!(events.last().unwrap().end, deltas.num_frames);
    }
    for p in seeds("segment_list") {
        let s = read_segment_list(&text(&p)).unwrap();
        assert_eq!(read_segment_list(&write_segment_list(&s)).unwrap(), s);
    }
}

fn mutate(mut bytes: Vec<u8>, edits: &[(usize, u8)], cut: usize) -> Vec<u8> {
    for &(i, b) in edits {
        if !bytes.is_empty() {
            let n = bytes.len();
            bytes[i % n] = b;
        }
    }
    bytes.truncate(bytes.len().saturating_sub(cut % 64));
    bytes
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutated_seeds_never_panic(
        edits in prop::collection::vec((any::<usize>(), any::<u8>()), 0..6),
        cut in any::<usize>(),
    ) {
        for target in ["trace", "ground_truth", "scenario", "model", "belief_output", "segment_list", "feature_dump"] {
            for p in seeds(target) {
                let bytes = mutate(std::fs::read(&p).unwrap(), &edits, cut);
                if target == "feature_dump" {
                    let _ = decode_feature_dump(&bytes);
                    continue;
                }
                let Ok(s) = std::str::from_utf8(&bytes) else { continue };
                match target {
                    "trace" => { let _ = read_trace(s); }
                    "ground_truth" => { let _ = read_ground_truth(s); }
                    "scenario" => { let _ = ScenarioSpec::from_toml(s); }
                    "model" => { let _ = read_model(s); }
                    "belief_output" => { let _ = read_belief_output(s); }
                    _ => { let _ = read_segment_list(s); }
                }
            }
        }
    }
}
