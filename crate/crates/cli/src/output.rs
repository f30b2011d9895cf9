// SPDX-License-Identifier: MIT
//! Artifact writing: the output directory, the run manifest and the
//! machine-readable error record.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use svarid::{Error, Result};

/// Exit status for configuration, input-format and I/O failures.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for numerical failures (instability, singular systems, ...).
pub const EXIT_NUMERICAL: i32 = 3;

/// Collects the artifacts of one run inside its output directory.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Open `name` for writing and record it as an artifact.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<fs::File>> {
        self.written.push(name.to_string());
        Ok(BufWriter::new(fs::File::create(self.root.join(name))?))
    }

    /// Write `value` as pretty-printed JSON followed by a newline.
    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

/// Machine-readable description of a failed run.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub command: String,
    /// `config` or `numerical`.
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl ErrorRecord {
    pub fn new(command: &str, e: &Error) -> Self {
        let numerical = e.is_numerical();
        ErrorRecord {
            command: command.to_string(),
            kind: if numerical { "numerical" } else { "config" },
            exit_code: if numerical { EXIT_NUMERICAL } else { EXIT_CONFIG },
            message: e.to_string(),
        }
    }
}

/// Echo of the resolved configuration; the timestamp is the only field that
/// differs between identical reruns.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub library_version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub threads: usize,
    pub status: &'static str,
    pub outputs: Vec<String>,
    pub created: String,
}
