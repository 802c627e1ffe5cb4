#![no_main]

use knotstrength::io::{parse_knots, KnotColumns};
use knotstrength::CellGrid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_knots(text, "fuzz", &KnotColumns::default(), &CellGrid::standard()) {
        for r in records {
            assert!(r.knot.volume >= 0.0 && r.knot.lx.is_finite());
        }
    }
});
