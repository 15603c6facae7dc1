use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use spencer_cli::{execute, Command, Format, RunArgs};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

/// Formal analysis of linear Lie equations described in a problem file.
#[derive(Debug, Parser)]
#[command(name = "spencer", version)]
struct Cli {
    /// Problem file in the spencer DSL
    #[arg(long)]
    input: std::path::PathBuf,
    #[arg(long, value_enum)]
    command: Command,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
    /// Series truncation order, overriding the file
    #[arg(long)]
    truncation: Option<u16>,
    /// Prolongation depth (meaning depends on the command)
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=16))]
    depth: Option<u8>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let text = match std::fs::read_to_string(&cli.input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.input.display());
            return ExitCode::from(2);
        }
    };
    std::panic::set_hook(Box::new(|_| {}));
    let format = match cli.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Text => Format::Text,
    };
    let args = RunArgs { depth: cli.depth.map(usize::from) };
    match execute(&text, cli.command, format, cli.truncation.map(i32::from), args) {
        Ok((out, code)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(&out).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(code as u8)
        }
        Err((msg, code)) => {
            eprintln!("{msg}");
            ExitCode::from(code as u8)
        }
    }
}
