use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use g2kit::cli::{render, run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let output = cli.output;
    match run(cli) {
        Ok(report) => {
            let _ = writeln!(std::io::stdout().lock(), "{}", render(&report, output));
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("g2kit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
