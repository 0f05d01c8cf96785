use std::process::ExitCode;

fn main() -> ExitCode {
    setexpand::cli::run(std::env::args_os())
}
