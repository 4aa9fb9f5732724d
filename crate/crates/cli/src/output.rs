//! CSV and JSON output helpers.
//!
//! Every CSV has a header row and prints floating-point values with 17
//! significant digits, so reruns with the same flags and seed are
//! byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hmc_core::{Error, Result};

/// A float rendered with 17 significant digits.
pub fn float_cell(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    path: PathBuf,
    buffer: String,
    columns: usize,
}

impl CsvWriter {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", dir.display())))?;
        let mut buffer = String::new();
        buffer.push_str(&header.join(","));
        buffer.push('\n');
        Ok(Self {
            path: dir.join(name),
            buffer,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        let _ = writeln!(self.buffer, "{}", cells.join(","));
    }

    /// Writes the whole file at once and returns its path.
    pub fn finish(self) -> Result<PathBuf> {
        fs::write(&self.path, self.buffer.as_bytes()).map_err(|e| {
            Error::InvalidInput(format!("cannot write {}: {e}", self.path.display()))
        })?;
        Ok(self.path)
    }
}

/// `git describe --always --dirty`, or "unknown" outside a repository.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|out| out.status.success())
        .and_then(|out| String::from_utf8(out.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}
