use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let inv = ppsq::cli::invoke(std::env::args_os());
    let written = match &inv.out {
        Some(path) => std::fs::write(path, inv.document.as_bytes()),
        None => std::io::stdout().lock().write_all(inv.document.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("ppsq: cannot write output: {e}");
        return ExitCode::from(ppsq::cli::EXIT_USAGE as u8);
    }
    ExitCode::from(inv.exit_code as u8)
}
