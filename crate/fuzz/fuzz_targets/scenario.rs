#![no_main]
use libfuzzer_sys::fuzz_target;
use waiterplan::scenario::ScenarioFile;

// Decoding only: semantic validation estimates eigenvalues and is too slow
// to be useful under the fuzzer.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ScenarioFile::from_json_str(text);
    }
});
