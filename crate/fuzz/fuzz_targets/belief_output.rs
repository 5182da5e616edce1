#![no_main]

use fmp_core::parser::read_belief_output;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok((events, deltas)) = read_belief_output(data) {
        assert!(deltas.is_legal());
        assert_eq!(events.last().map_or(0, |e| e.end), deltas.num_frames);
    }
});
