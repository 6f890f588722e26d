use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::divergence::Verdict;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub histogram_id: u32,
    pub verdict: Verdict,
    pub labeler_id: String,
    /// RFC 3339 timestamp.
    pub timestamp: String,
}

/// Append-only JSON-lines label store. One writer per file.
#[derive(Debug)]
pub struct LabelLog {
    path: PathBuf,
    file: File,
}

impl LabelLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(LabelLog { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record and syncs it to disk before returning.
    pub fn append(&mut self, record: &LabelRecord) -> Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}

/// Reads every record of a label file. A truncated final line, as left by a
/// crash during a write, is ignored.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<LabelRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    let mut records = Vec::with_capacity(lines.len());
    let last = lines.len().saturating_sub(1);
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => records.push(r),
            Err(_) if i == last => break,
            Err(e) => return Err(invalid(format!("label line {}: {e}", i + 1))),
        }
    }
    Ok(records)
}
