#![no_main]

use libfuzzer_sys::fuzz_target;
use smellprobe::probe::wire::parse_response;

fuzz_target!(|data: &[u8]| {
    // Small limit so truncation paths get exercised too.
    if let Ok(r) = parse_response(data, 64) {
        assert!(r.body.len() <= 64);
        assert!((100..=999).contains(&r.status));
    }
});
