#![no_main]

use eqv_core::expr::{expr_from_json, expr_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = expr_from_json(text) {
        let back = expr_from_json(&expr_to_json(&e).to_string()).expect("encoded form decodes");
        assert_eq!(back, e);
    }
});
