#![no_main]

use knotstrength::io::parse_truth;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&cells, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let _ = parse_truth(text, "fuzz", usize::from(cells % 64) + 1);
});
