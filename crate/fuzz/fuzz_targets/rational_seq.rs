#![no_main]

use frog_core::moments::RationalSeq;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(seq) = RationalSeq::parse(text) {
        let again = RationalSeq::parse(&seq.to_text()).expect("rendered sequence parses");
        assert_eq!(again, seq);
    }
});
