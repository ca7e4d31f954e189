#![no_main]

use frog_core::ConfigRule;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rule) = ConfigRule::parse(text) {
        let shown = rule.to_string();
        ConfigRule::parse(&shown).unwrap_or_else(|e| panic!("`{shown}` does not reparse: {e}"));
    }
});
