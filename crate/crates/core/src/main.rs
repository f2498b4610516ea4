use std::process::ExitCode;

fn main() -> ExitCode {
    indsup::cli::main_with_args(std::env::args_os())
}
