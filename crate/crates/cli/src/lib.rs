//! Problem-file front end for spencer-core.

pub mod commands;
pub mod dsl;
pub mod report;

use std::panic::{self, AssertUnwindSafe};

use thiserror::Error;

pub use commands::{run_command, Command, RunArgs};
pub use dsl::{parse_problem_file, parse_problem_file_with, Diagnostic, ProblemSpec};
pub use report::{emit_report, Format, Report, Status};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Parse(#[from] Diagnostic),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("equation {0}: {1}")]
    Equation(String, spencer_core::Error),
    #[error("{0}")]
    Core(#[from] spencer_core::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use spencer_core::Error as E;
        match self {
            CliError::Equation(_, E::NonRegular(_) | E::NotConstantRank(_))
            | CliError::Core(E::NonRegular(_) | E::NotConstantRank(_)) => 3,
            _ => 2,
        }
    }
}

/// Parses `text`, runs `cmd` and renders the report. Returns stdout bytes
/// and the exit code; errors are returned as messages for stderr.
pub fn execute(
    text: &str,
    cmd: Command,
    format: Format,
    truncation: Option<i32>,
    args: RunArgs,
) -> Result<(Vec<u8>, i32), (String, i32)> {
    let caught = panic::catch_unwind(AssertUnwindSafe(|| -> Result<Report, CliError> {
        let spec = parse_problem_file_with(text, truncation)?;
        run_command(&spec, cmd, args)
    }));
    let res = match caught {
        Ok(r) => r,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(CliError::Internal(msg))
        }
    };
    match res {
        Ok(rep) => {
            let code = if rep.status == Status::Success { 0 } else { 1 };
            Ok((emit_report(&rep, format), code))
        }
        Err(e) => Err((format!("error: {e}"), e.exit_code())),
    }
}
