//! Result emission: a JSON envelope or a flat CSV table.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::args::{Command, OutputFormat};
use crate::error::{CliError, Result};

#[derive(Debug, Serialize)]
pub struct Envelope<'a> {
    pub config: &'a Command,
    pub seed: u64,
    pub results: Value,
}

/// A flat table with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Everything a command produces.
pub struct Outcome {
    pub results: Value,
    pub table: Table,
}

pub fn render(command: &Command, outcome: &Outcome, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            let envelope = Envelope {
                config: command,
                seed: command.seed(),
                results: outcome.results.clone(),
            };
            let mut s = serde_json::to_string_pretty(&envelope)
                .map_err(|e| CliError::Serialize(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => Ok(outcome.table.render()),
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}
