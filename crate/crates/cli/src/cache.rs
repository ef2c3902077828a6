//! Append-only run cache of spectrum rows, keyed by curve hash, table,
//! rotation number and requested precision.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::records::Row;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Entry {
    pub curve: String,
    pub table: String,
    pub requested_bits: u32,
    pub row: Row,
}

pub struct RunCache {
    path: PathBuf,
    entries: Vec<Entry>,
}

impl RunCache {
    /// Opens the cache file, treating a missing file as empty. Unreadable
    /// lines are skipped with a warning.
    pub fn open(path: &Path) -> Result<RunCache> {
        let entries = match fs::read_to_string(path) {
            Ok(text) => text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .filter_map(|l| match serde_json::from_str(l) {
                    Ok(e) => Some(e),
                    Err(err) => {
                        log::warn!("ignoring malformed cache line in {}: {err}", path.display());
                        None
                    }
                })
                .collect(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e).with_context(|| format!("reading cache {}", path.display())),
        };
        Ok(RunCache {
            path: path.to_path_buf(),
            entries,
        })
    }

    /// A row for `(curve, table, p, q)` computed at no fewer than `bits`.
    pub fn lookup(&self, curve: &str, table: &str, p: u64, q: u64, bits: u32) -> Option<&Row> {
        self.entries
            .iter()
            .filter(|e| e.curve == curve && e.table == table && e.row.p == p && e.row.q == q)
            .filter(|e| e.requested_bits >= bits && e.row.bits >= bits)
            .min_by_key(|e| e.requested_bits)
            .map(|e| &e.row)
    }

    pub fn insert(&mut self, entry: Entry) -> Result<()> {
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .with_context(|| format!("opening cache {}", self.path.display()))?;
        serde_json::to_writer(&mut f, &entry)?;
        f.write_all(b"\n")?;
        self.entries.push(entry);
        Ok(())
    }
}
