use std::process::ExitCode;

fn main() -> ExitCode {
    mirage::cli::main_from(std::env::args_os())
}
