#![no_main]

use fmp_core::world::{read_ground_truth, write_ground_truth};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(gt) = read_ground_truth(data) {
        assert!(gt.deltas.is_legal());
        let again = read_ground_truth(&write_ground_truth(&gt)).expect("written truth reads back");
        assert_eq!(again.deltas, gt.deltas);
        assert_eq!(again.events, gt.events);
    }
});
