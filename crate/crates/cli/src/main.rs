use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(irsa_cli::run(std::env::args_os(), &mut io::stdout().lock()))
}
