#![no_main]

use fmp_core::world::{read_trace, write_trace};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(trace) = read_trace(data) {
        let again = read_trace(&write_trace(&trace)).expect("written trace reads back");
        assert_eq!(again, trace);
    }
});
