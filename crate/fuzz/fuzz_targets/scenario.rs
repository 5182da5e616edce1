#![no_main]

use fmp_core::world::ScenarioSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if data.len() > 4096 {
        return;
    }
    if let Ok(spec) = ScenarioSpec::from_toml(data) {
        let again = ScenarioSpec::from_toml(&spec.to_toml()).expect("written scenario reads back");
        assert_eq!(again, spec);
    }
});
