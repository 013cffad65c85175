#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Err(e) = eqv_core::dsl::parse(text) {
            assert!(e.line >= 1 && e.col >= 1);
        }
    }
});
