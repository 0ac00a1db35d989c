#![no_main]
use libfuzzer_sys::fuzz_target;
use waiterplan::planlog::PlanLog;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(log) = PlanLog::parse(text) {
            assert_eq!(PlanLog::parse(&log.to_text()).unwrap(), log);
        }
    }
});
