#![no_main]

use knotstrength::io::{parse_draws, render_draws};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(draws) = parse_draws(text, "fuzz") {
        let again = String::from_utf8(render_draws(&draws).unwrap()).unwrap();
        assert_eq!(parse_draws(&again, "fuzz").unwrap(), draws);
    }
});
