#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = fasc::io::parse_manifest(text) {
            let _ = m.spec();
        }
    }
});
