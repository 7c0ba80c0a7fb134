#![no_main]

use libfuzzer_sys::fuzz_target;
use smellprobe::smells::hsts::HstsPolicy;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let policy = HstsPolicy::parse(&text);
    assert!(!(policy.is_strong() && policy.short_max_age()));
});
