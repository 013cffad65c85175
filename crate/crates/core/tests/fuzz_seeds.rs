//! Replays the checked-in fuzz corpus through the same checks the fuzz targets make.

use std::fs;
use std::path::PathBuf;

use eqv_core::dsl::{parse, parse_expr, Scope};
use eqv_core::expr::{expr_from_json, expr_to_json};

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus {}", dir.display());
    out
}

fn scope() -> Scope {
    Scope::permissive().dep("u").dep("w")
}

#[test]
fn session_seeds() {
    let mut ok = 0;
    for (path, text) in corpus("parse_session") {
        match parse(&text) {
            Ok(_) => ok += 1,
            Err(e) => assert!(e.line >= 1 && e.col >= 1, "{}: {e}", path.display()),
        }
    }
    assert!(ok >= 8);
}

#[test]
fn expr_seeds_round_trip() {
    for (path, text) in corpus("parse_expr") {
        let e = parse_expr(&text, &scope()).unwrap_or_else(|err| panic!("{}: {err}", path.display()));
        let printed = e.to_string();
        let again = parse_expr(&printed, &scope()).unwrap();
        assert_eq!(again.to_string(), printed, "{}", path.display());
    }
}

#[test]
fn json_seeds_round_trip() {
    for (path, text) in corpus("decode_expr_json") {
        let e = expr_from_json(&text).unwrap_or_else(|err| panic!("{}: {err}", path.display()));
        let back = expr_from_json(&expr_to_json(&e).to_string()).unwrap();
        assert_eq!(back, e, "{}", path.display());
    }
}
