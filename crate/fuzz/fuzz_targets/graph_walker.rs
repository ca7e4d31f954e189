#![no_main]

use frog_harness::config::{no_files, parse_graph, parse_walker};
use libfuzzer_sys::fuzz_target;

// First line names the graph, the remainder the walker.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (graph, walker) = text.split_once('\n').unwrap_or((text, "srw"));
    if let Ok(g) = parse_graph(graph, &no_files) {
        let _ = parse_walker(walker, &g, &no_files);
    }
});
