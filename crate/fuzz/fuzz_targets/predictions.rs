#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = fasc::io::parse_predictions(text) {
            let _ = p.zero_based();
            let _ = p.affinity_matrix();
        }
    }
});
