#![no_main]

use knotstrength::io::{ingest_str, ColumnMapping};
use knotstrength::CellGrid;
use libfuzzer_sys::fuzz_target;

// Input is split at the first NUL byte into the specimens and knots tables.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (specimens, knots) = text.split_once('\0').unwrap_or((text, ""));
    let grid = CellGrid::standard();
    if let Ok(out) = ingest_str(specimens, knots, &grid, &ColumnMapping::default()) {
        for s in &out {
            s.validate(&grid).unwrap();
        }
    }
});
