use std::process::ExitCode;

fn main() -> ExitCode {
    hamlearn::cli::main_with_args(std::env::args_os())
}
