use std::process::ExitCode;

fn main() -> ExitCode {
    ppvq::cli::run(std::env::args_os())
}
