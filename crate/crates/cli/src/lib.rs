//! Experiment driver for the `q2lab` binary.

pub mod commands;
pub mod config;
pub mod output;
pub mod report;
pub mod runner;

use std::path::PathBuf;

use config::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
    #[error("{} run(s) failed; partial results written", failures.len())]
    Partial { failures: Vec<String>, files: Vec<PathBuf> },
    #[error("{0} check(s) failed")]
    CheckFailed(usize),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(_) => 1,
            LabError::Runtime(_) | LabError::Partial { .. } => 2,
            LabError::CheckFailed(_) => 3,
        }
    }
}

impl From<q2free::Error> for LabError {
    fn from(e: q2free::Error) -> Self {
        LabError::Runtime(e.into())
    }
}

pub fn dispatch(cli: &Cli) -> Result<commands::CommandOutput, LabError> {
    match &cli.command {
        Command::Run(a) => commands::cmd_run(a),
        Command::Sweep(a) => commands::cmd_sweep(a),
        Command::Goodedges(a) => commands::cmd_goodedges(a),
        Command::Ode(a) => commands::cmd_ode(a),
        Command::Oracle(a) => commands::cmd_oracle(a),
        Command::Report(a) => report::cmd_report(a),
    }
}
