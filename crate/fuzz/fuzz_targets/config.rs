#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(layer) = fasc_cli::parse_config(text) {
            let _ = fasc_cli::ExperimentConfig::resolve(layer);
        }
    }
});
