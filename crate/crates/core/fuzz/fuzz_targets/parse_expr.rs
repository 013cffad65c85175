#![no_main]

use eqv_core::dsl::{parse_expr, Scope};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let scope = Scope::permissive().dep("u").dep("w");
    if let Ok(e) = parse_expr(text, &scope) {
        let printed = e.to_string();
        let again = parse_expr(&printed, &scope).expect("printed form parses");
        assert_eq!(again.to_string(), printed);
    }
});
