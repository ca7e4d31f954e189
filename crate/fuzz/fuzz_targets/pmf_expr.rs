#![no_main]

use frog_core::init_config::parse_pmf_expr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = parse_pmf_expr(text) {
        assert!((0..=p.max_support()).all(|k| p.mass(k) >= 0.0));
    }
});
