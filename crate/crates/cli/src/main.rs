use std::io::Write;

fn main() {
    let out = kgraph_cli::run(std::env::args_os());
    if let Some(msg) = &out.message {
        eprintln!("{msg}");
    }
    // with --out the report goes to the file only
    let to_stdout = !std::env::args().any(|a| a == "--out" || a.starts_with("--out="));
    if let (Some(report), true) = (&out.report, to_stdout) {
        let _ = std::io::stdout().write_all(report.as_bytes());
    }
    std::process::exit(out.code);
}
