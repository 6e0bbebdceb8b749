#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cloud) = fasc::io::read_points_csv(data) {
        // Anything accepted must survive a write/read cycle unchanged.
        let mut buf = Vec::new();
        fasc::io::write_points_csv(&mut buf, &cloud).unwrap();
        assert_eq!(fasc::io::read_points_csv(buf.as_slice()).unwrap(), cloud);
    }
});
