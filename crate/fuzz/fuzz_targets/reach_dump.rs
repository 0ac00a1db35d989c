#![no_main]
use libfuzzer_sys::fuzz_target;
use waiterplan::dump::{decode, encode};

fuzz_target!(|data: &[u8]| {
    if let Ok(sets) = decode(data) {
        // only canonical input decodes, so re-encoding must reproduce it
        assert_eq!(encode(&sets).unwrap(), data);
    }
});
