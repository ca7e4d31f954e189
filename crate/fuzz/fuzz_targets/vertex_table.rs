#![no_main]

use frog_core::moments::{interpolate, VertexTable};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(table) = VertexTable::parse(text) else {
        return;
    };
    if table.n > 8 {
        return;
    }
    // a complete table is reproduced exactly at every vertex
    if let Ok(poly) = interpolate(&table) {
        for mask in 0..1usize << table.n {
            assert_eq!(&poly.eval_vertex(mask), table.get(mask).unwrap());
        }
    }
});
