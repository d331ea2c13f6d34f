use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use q2lab::config::Cli;
use q2lab::{dispatch, LabError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            // a closed pipe (e.g. `| head`) is not an error
            let mut stdout = std::io::stdout().lock();
            for line in &out.lines {
                let _ = writeln!(stdout, "{line}");
            }
            for f in &out.files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let LabError::Partial { failures, files } = &e {
                for f in failures {
                    eprintln!("failed: {f}");
                }
                for f in files {
                    println!("wrote {}", f.display());
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
