#![no_main]

use knotstrength::io::{parse_specimens, render_specimens, SpecimenColumns};
use knotstrength::CellGrid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let grid = CellGrid::standard();
    if let Ok(specimens) = parse_specimens(text, "fuzz", &SpecimenColumns::default(), &grid) {
        // anything accepted must survive a write/read cycle unchanged
        let again = String::from_utf8(render_specimens(&specimens).unwrap()).unwrap();
        assert_eq!(
            parse_specimens(&again, "fuzz", &SpecimenColumns::default(), &grid).unwrap(),
            specimens
        );
    }
});
