#![no_main]

use libfuzzer_sys::fuzz_target;
use sumfree_lab::parse::parse_group_spec;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    // A small element cap keeps accepted groups cheap to materialize.
    if let Ok(g) = parse_group_spec(s, 1 << 12) {
        assert!(g.order() % 2 == 0 && g.order() <= 1 << 12);
        let again = parse_group_spec(&g.canonical_name(), 1 << 12).unwrap();
        assert_eq!(again.canonical_name(), g.canonical_name());
    }
});
