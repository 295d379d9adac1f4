#![no_main]

use libfuzzer_sys::fuzz_target;
use sumfree_lab::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(config) = RunConfig::from_json(s) {
        let back = RunConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(back.hash(), config.hash());
    }
});
