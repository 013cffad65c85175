use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn eqv(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_eqv"))
        .args(args)
        .current_dir(corpus_root())
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = if stdout.trim().is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&stdout).expect("stdout is JSON")
    };
    (out.status.code().unwrap(), json, String::from_utf8(out.stderr).unwrap())
}

fn corpus_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn hyperu_under_t24_is_equivalence() {
    let (code, json, _) = eqv(&["check", "--family", "hyperu", "--transform", "T24"]);
    assert_eq!(code, 0);
    assert_eq!(json["verdict"], "equivalence");
    assert_eq!(json["certificate"], "0");
    assert!(json["induced_action"]["a1"].as_str().unwrap().contains("S[1](z)"));
}

#[test]
fn hyper_under_t10j_is_not_equivalence() {
    let (code, json, _) = eqv(&["check", "--family", "hyper", "--transform", "T10j"]);
    assert_eq!(code, 1);
    assert_eq!(json["verdict"], "not-equivalence");
    assert!(!json["failures"].as_array().unwrap().is_empty());
}

#[test]
fn reduce_to_wave_equation() {
    let (code, json, stderr) = eqv(&["reduce", "--family", "hyperxp", "--a3", "a1(x)*a2(t)"]);
    assert_eq!(code, 0);
    assert_eq!(json["wave"], true);
    assert_eq!(json["reduced"], "D[w,y,z]");
    assert!(stderr.contains("wave equation"));
}

#[test]
fn errors_are_json_with_exit_2() {
    let (code, json, _) = eqv(&["check", "--family", "nope", "--transform", "T8"]);
    assert_eq!(code, 2);
    assert_eq!(json["error"]["kind"], "unknown-family");

    let (code, json, _) = eqv(&["check", "--family", "hyper"]);
    assert_eq!(code, 2);
    assert_eq!(json["error"]["kind"], "usage");

    let (code, json, _) = eqv(&["check", "--family", "glin", "--transform", "T14"]);
    assert_eq!(code, 2);
    assert_eq!(json["error"]["kind"], "variable-mismatch");
}

#[test]
fn session_parse_errors_carry_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.eqv");
    std::fs::write(&path, "indep t x;\ndep u;\nequation E: D[u,t] + q;\n").unwrap();
    let (code, json, _) = eqv(&["transform", "--session", path.to_str().unwrap(), "--equation", "E", "--transform", "T14"]);
    assert_eq!(code, 2);
    assert_eq!(json["error"]["kind"], "parse");
    let msg = json["error"]["message"].as_str().unwrap();
    assert!(msg.ends_with("bad.eqv:3:22: undeclared symbol `q`"), "{msg}");
}

#[test]
fn json_out_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let cfg = dir.path().join("eqv.toml");
    std::fs::write(&cfg, "[oracle]\nseed = 11\npoints = 10\n").unwrap();
    let (code, json, _) = eqv(&[
        "oracle",
        "--family",
        "hypertt",
        "--transform",
        "T32",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "12",
        "--json-out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(json["seed"], 12);
    assert_eq!(json["points"], 10);
    assert_eq!(json["holds"], true);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written, json);
}

#[test]
fn transform_prints_lead_normalized_equation() {
    let (code, json, _) = eqv(&["transform", "--family", "hyper", "--transform", "identity"]);
    assert_eq!(code, 0);
    assert_eq!(
        json["transformed"],
        "w*a3(y,z) + D[w,y]*a1(y,z) + D[w,z]*a2(y,z) + D[w,y,z]"
    );
}

#[test]
fn theorem_check_instances() {
    let (code, json, _) = eqv(&[
        "theorem-check", "--family", "hypertt", "--target", "hyperu", "--transform", "T32", "--instances", "3",
    ]);
    assert_eq!(code, 0);
    assert_eq!(json["verdict"], "holds");
    assert_eq!(json["details"]["instances"], 3);
}

#[test]
fn help_goes_to_stderr_without_json() {
    let (code, json, stderr) = eqv(&["--help"]);
    assert_eq!(code, 0);
    assert!(json.is_null());
    assert!(stderr.contains("induced-action"));
}

/// Every worked example shipped under `paper/`, with its expected exit code.
const CORPUS: &[(&str, &[&str], i32)] = &[
    ("glin.eqv", &["check", "--family", "glin3", "--transform", "ET"], 0),
    ("glin.eqv", &["check", "--family", "glin4", "--transform", "ET"], 0),
    ("glin.eqv", &["check", "--family", "glin5", "--transform", "ET"], 0),
    ("glin.eqv", &["check", "--family", "glin3", "--transform", "ETJ"], 1),
    ("gliny.eqv", &["check", "--family", "gliny3", "--transform", "ET"], 0),
    ("gliny.eqv", &["check", "--family", "gliny5", "--transform", "ET"], 0),
    ("gliny.eqv", &["check", "--family", "glin3", "--transform", "ET"], 1),
    ("glin0y.eqv", &["check", "--family", "glin0y3", "--transform", "ET"], 0),
    ("glin0y.eqv", &["check", "--family", "glin0y4", "--transform", "ET"], 0),
    ("glin0y.eqv", &["check", "--family", "glin0y3", "--transform", "General"], 1),
    ("glin0y.eqv", &["check", "--family", "glin0y3", "--transform", "FreeS"], 1),
    ("hyper.eqv", &["check", "--family", "hyper", "--transform", "G"], 0),
    ("hyper.eqv", &["check", "--family", "hyper", "--transform", "GJ"], 1),
    ("hyper.eqv", &["theorem-check", "--family", "hyper", "--target", "hyperu", "--transform", "G"], 0),
    ("hyperu.eqv", &["check", "--family", "hyperu", "--transform", "H1"], 1),
    ("hyperu.eqv", &["check", "--family", "hyperu", "--transform", "H2"], 1),
    ("hyperu.eqv", &["check", "--family", "hyperu", "--transform", "H3"], 1),
    ("hyperu.eqv", &["check", "--family", "hyperu", "--transform", "H4"], 0),
    ("hyperxp.eqv", &["check", "--family", "hyperxp", "--transform", "Trial"], 1),
    ("hyperxp.eqv", &["check", "--family", "hyperxp", "--transform", "ET"], 0),
    ("hyperxp.eqv", &["reduce", "--family", "hyperxp"], 0),
    ("hyperxp.eqv", &["reduce", "--equation", "Reducible"], 0),
    ("hyperxp.eqv", &["transform", "--family", "hyperxp", "--transform", "Reduce"], 0),
    ("hypertt.eqv", &["check", "--family", "hypertt", "--transform", "Trial"], 1),
    ("hypertt.eqv", &["check", "--family", "hypertt", "--transform", "ET"], 0),
    ("invariants.eqv", &["invariants", "--equation", "Wave"], 0),
    ("invariants.eqv", &["invariants", "--equation", "Cancelling"], 0),
    ("invariants.eqv", &["invariants", "--equation", "Constant"], 0),
    ("invariants.eqv", &["invariants", "--family", "hyper", "--transform", "G"], 0),
];

#[test]
fn paper_corpus() {
    let root = corpus_root().join("paper");
    let mut listed: Vec<&str> = CORPUS.iter().map(|(f, _, _)| *f).collect();
    listed.dedup();
    for entry in std::fs::read_dir(&root).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.ends_with(".eqv") {
            assert!(listed.contains(&name.as_str()), "{name} has no corpus entry");
        }
    }
    for (file, args, want) in CORPUS {
        let session = root.join(file);
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--session", session.to_str().unwrap()]);
        let (code, json, stderr) = eqv(&full);
        assert_eq!(code, *want, "{file} {args:?}: {stderr}");
        assert!(json.get("error").is_none(), "{file} {args:?}: {json}");
    }
}

#[test]
fn paper_corpus_results() {
    let s = corpus_root().join("paper/invariants.eqv");
    let (_, json, _) = eqv(&["invariants", "--session", s.to_str().unwrap(), "--equation", "Constant"]);
    assert_eq!(json["invariants"]["H"], "-c");
    assert_eq!(json["invariants"]["P"], "1");

    let s = corpus_root().join("paper/glin0y.eqv");
    let (_, json, _) = eqv(&["check", "--session", s.to_str().unwrap(), "--family", "glin0y3", "--transform", "General"]);
    let forbidden: Vec<&Value> = json["failures"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|f| f["forbidden"].as_array().unwrap())
        .collect();
    assert!(forbidden.iter().any(|v| *v == "z"), "{json}");
}
