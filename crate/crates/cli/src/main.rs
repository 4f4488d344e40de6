use std::process::ExitCode;

fn main() -> ExitCode {
    geoprob_cli::run_cli(std::env::args_os())
}
