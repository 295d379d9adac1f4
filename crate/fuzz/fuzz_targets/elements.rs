#![no_main]

use libfuzzer_sys::fuzz_target;
use sumfree_lab::group::AbelianGroup;
use sumfree_lab::parse::{parse_elements, parse_set};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let cyclic = AbelianGroup::from_written(&[12], u64::MAX).unwrap();
    let product = AbelianGroup::from_written(&[2, 4, 3], u64::MAX).unwrap();
    for g in [&cyclic, &product] {
        if let Ok(v) = parse_elements(g, s) {
            assert!(v.windows(2).all(|w| w[0] < w[1]));
            assert!(v.iter().all(|&x| x < g.size()));
        }
        if let Ok(v) = parse_set(g, s) {
            assert!(v.iter().all(|&x| x < g.size()));
        }
    }
});
