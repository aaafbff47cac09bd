//! Command implementations behind the `voxid` binary.
//!
//! Each `cmd_*` function takes parsed inputs and returns a value; printing
//! and exit codes live in `main.rs`, so tests drive the same code paths.

pub mod bench;
pub mod commands;
pub mod corpus;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad size list: {0}")]
    BadSizeList(String),
    #[error("test labels not enrolled in the model: {}", describe_rows(.0))]
    UnknownLabel(Vec<(usize, u32)>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}:{line}: {msg}")]
    BadInputFile { path: String, line: usize, msg: String },
    #[error("{failed} of {total} inputs failed")]
    InputsFailed { failed: usize, total: usize },
}

fn describe_rows(rows: &[(usize, u32)]) -> String {
    rows.iter()
        .map(|(row, label)| format!("row {row} (label {label})"))
        .collect::<Vec<_>>()
        .join(", ")
}
