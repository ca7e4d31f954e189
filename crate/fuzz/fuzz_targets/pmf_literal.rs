#![no_main]

use frog_core::Pmf;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = Pmf::parse_literal(text) {
        let total: f64 = (0..=p.max_support()).map(|k| p.mass(k)).sum();
        assert!((total - 1.0).abs() < 1e-6, "mass {total}");
    }
});
