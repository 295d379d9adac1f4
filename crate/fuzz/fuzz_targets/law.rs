#![no_main]

use libfuzzer_sys::fuzz_target;
use sumfree_lab::group::AbelianGroup;
use sumfree_lab::parse::parse_law;
use sumfree_lab::sampling::sample_elements;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let g = AbelianGroup::from_written(&[2, 8], u64::MAX).unwrap();
    if let Ok(law) = parse_law(s, 1) {
        // Laws that validate against the group must also sample.
        if law.validate(&g).is_ok() {
            sample_elements(&g, &law, 0, 0).unwrap();
        }
    }
});
