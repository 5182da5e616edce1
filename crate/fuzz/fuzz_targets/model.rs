#![no_main]

use fmp_core::parser::{read_model, write_model};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(model) = read_model(data) {
        let text = write_model(&model).expect("valid model serializes");
        assert_eq!(read_model(&text).expect("written model reads back"), model);
    }
});
