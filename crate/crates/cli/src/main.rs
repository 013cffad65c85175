use std::process::ExitCode;

fn main() -> ExitCode {
    let out = eqv_cli::run(std::env::args_os());
    if !out.summary.is_empty() {
        eprintln!("{}", out.summary.trim_end());
    }
    if !out.report.is_null() {
        println!("{}", serde_json::to_string_pretty(&out.report).expect("json values serialize"));
    }
    ExitCode::from(out.code as u8)
}
