use std::io::Write;
use std::path::{Path, PathBuf};

use riskspace::Error;
use serde_json::{json, Value};

use crate::Global;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Capacity { .. }) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Core(Error::Invalid { field, reason }) => {
                json!({"error": "invalid", "field": field, "reason": reason})
            }
            CliError::Core(Error::Capacity {
                cap,
                limit,
                actual,
                dimension,
            }) => json!({
                "error": "capacity",
                "cap": cap,
                "limit": limit,
                "actual": actual,
                "dimension": dimension,
            }),
            CliError::Core(Error::Solver(msg)) => json!({"error": "solver", "reason": msg}),
            CliError::Io { path, message } => {
                json!({"error": "io", "path": path.display().to_string(), "reason": message})
            }
        }
    }
}

pub fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Core(Error::Invalid {
        field: field.into(),
        reason: reason.into(),
    })
}

/// A rendered result: JSON values are pretty-printed, text is written as is.
pub enum Output {
    Json(Value),
    Text(String),
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(text.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn render(out: Output) -> String {
    let mut text = match out {
        Output::Json(v) => serde_json::to_string_pretty(&v).expect("JSON values serialize"),
        Output::Text(t) => t,
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    text
}

pub fn emit(global: &Global, out: Output) -> Result<(), CliError> {
    let text = render(out);
    match &global.out {
        Some(path) => write_atomic(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
