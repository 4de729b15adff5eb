use std::process::ExitCode;

use clap::Parser;
use sse_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = sse_cli::init_threads().and_then(|_| sse_cli::run(&cli.command));
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
