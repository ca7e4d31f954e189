#![no_main]

use frog_core::ExplicitGraph;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = ExplicitGraph::parse(text) {
        let again = ExplicitGraph::parse(&g.to_text()).expect("rendered graph parses");
        assert_eq!(again.len(), g.len());
        assert_eq!(again.to_text(), g.to_text());
    }
});
