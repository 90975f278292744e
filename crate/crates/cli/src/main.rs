use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(iextract_cli::run(std::env::args()) as u8)
}
