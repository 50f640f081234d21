use std::process::ExitCode;

use clap::Parser;
use gmi_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            println!("{}", report.summary);
            if !cli.dry_run {
                println!("wrote {} artifact(s) to {}", report.artifacts.len(), report.directory.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gmi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
