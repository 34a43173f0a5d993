use std::process::ExitCode;

fn main() -> ExitCode {
    let mut out = std::io::stdout();
    let code = dsfkit_cli::run_cli(std::env::args(), &mut out);
    ExitCode::from(code as u8)
}
