#![no_main]

use libfuzzer_sys::fuzz_target;
use smellprobe::Snapshot;

fuzz_target!(|data: &[u8]| {
    // Whatever loads must survive a round trip.
    if let Ok(s) = Snapshot::from_bytes(data) {
        let again = Snapshot::from_bytes(&s.to_bytes()).expect("reload");
        assert_eq!(again, s);
    }
});
