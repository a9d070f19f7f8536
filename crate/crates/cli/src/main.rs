use std::process::ExitCode;

use clap::Parser;
use interest_cli::{report_error, run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            report_error(&err, &mut std::io::stderr().lock());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
