#![no_main]

use fmp_core::segments::{read_segment_list, write_segment_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(segs) = read_segment_list(data) {
        assert_eq!(read_segment_list(&write_segment_list(&segs)).expect("round trip"), segs);
    }
});
