#![no_main]

use libfuzzer_sys::fuzz_target;
use smellprobe::version::{compare_versions, parse_banner, SoftwareId};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let banner = parse_banner(text);
    for p in &banner.products {
        if let Some(v) = &p.version {
            assert_eq!(compare_versions(v, v), std::cmp::Ordering::Equal);
        }
    }
    let _ = SoftwareId::parse(text).version_state();
});
