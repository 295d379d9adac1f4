#![no_main]

use libfuzzer_sys::fuzz_target;
use sumfree_lab::parse::parse_p_grid;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if s.len() > 256 {
        return;
    }
    for p_star in [None, Some(0.125)] {
        if let Ok(grid) = parse_p_grid(s, p_star) {
            assert!(!grid.is_empty());
            assert!(grid.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
});
