use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use wirebend_service::cli::{error_json, execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.global.json;
    let mut stdout = std::io::stdout().lock();
    match execute(cli, &mut stdout) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            if json {
                let text = serde_json::to_string_pretty(&error_json(&e)).unwrap_or_default();
                let _ = writeln!(stdout, "{text}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}
