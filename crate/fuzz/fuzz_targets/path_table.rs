#![no_main]

use frog_core::engine::{run_explicit, ExplicitModel};
use frog_core::PathTable;
use libfuzzer_sys::fuzz_target;

// Input: adjacency text, a line holding `--`, then path-table text.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Some((adjacency, paths)) = text.split_once("\n--\n") else {
        return;
    };
    let Ok(model) = ExplicitModel::parse(adjacency, paths) else {
        return;
    };
    let g = model.graph();
    let rendered = model.table().to_text(g);
    let again = PathTable::parse(&rendered, g).expect("rendered table parses");
    assert_eq!(again.to_text(g), rendered);
    if g.len() <= 64 {
        let _ = run_explicit(&model);
    }
});
