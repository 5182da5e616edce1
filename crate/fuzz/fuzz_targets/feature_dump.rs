#![no_main]

use fmp_core::features::decode_feature_dump;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(dump) = decode_feature_dump(data) {
        assert_eq!(dump.values.len(), dump.rows * dump.cols);
    }
});
