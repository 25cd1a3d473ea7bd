use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(gradflow::runner::dispatch(gradflow::runner::Cli::parse()))
}
