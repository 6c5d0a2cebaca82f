use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ghzsim::app::Cli::parse();
    ghzsim::app::main_with(cli)
}
