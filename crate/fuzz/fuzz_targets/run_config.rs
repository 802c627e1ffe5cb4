#![no_main]

use knotstrength::io::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_toml_str(text) {
        cfg.grid().unwrap();
        cfg.sim_config().unwrap().validate().unwrap();
        cfg.hmc_config().validate().unwrap();
    }
});
