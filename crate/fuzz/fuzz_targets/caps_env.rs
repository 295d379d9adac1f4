#![no_main]

use libfuzzer_sys::fuzz_target;
use sumfree_lab::caps::Caps;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let _ = Caps::parse_overrides(s);
});
