#![no_main]

use libfuzzer_sys::fuzz_target;
use smellprobe::smells::patterns::{match_body_banners, match_framework};

fuzz_target!(|data: &[u8]| {
    let body = String::from_utf8_lossy(data);
    if let Some(m) = match_framework(&body) {
        assert!(m.start <= m.end && m.end <= body.len());
    }
    let _ = match_body_banners(&body);
});
