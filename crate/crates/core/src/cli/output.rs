//! Artifact writers: CSV with `#` metadata, JSON summaries, atomic replacement.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use super::CliError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Resolved configuration stamped into every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub command: &'static str,
    pub version: &'static str,
    pub config: BTreeMap<String, String>,
}

impl RunMeta {
    pub fn new(command: &'static str, config: BTreeMap<String, String>) -> Self {
        Self {
            command,
            version: ARTIFACT_VERSION,
            config,
        }
    }
}

/// Column-oriented numeric table.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Pairs `(x, y)` of two named columns, for plotting.
    pub fn xy(&self, x: &str, y: &str) -> Vec<(f64, f64)> {
        let ix = self.columns.iter().position(|c| c == x);
        let iy = self.columns.iter().position(|c| c == y);
        match (ix, iy) {
            (Some(ix), Some(iy)) => self.rows.iter().map(|r| (r[ix], r[iy])).collect(),
            _ => Vec::new(),
        }
    }

    /// Renders with metadata lines, a header and shortest round-trip floats.
    /// Non-finite cells are refused.
    pub fn to_csv(&self, meta: &RunMeta, extra: &[(&str, String)]) -> Result<String, CliError> {
        let mut out = String::new();
        let _ = writeln!(out, "# sqzphase {}", meta.version);
        let _ = writeln!(out, "# command = {}", meta.command);
        for (k, v) in &meta.config {
            let _ = writeln!(out, "# {k} = {v}");
        }
        for (k, v) in extra {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(CliError::NonFinite(format!(
                    "row {:?} of {}",
                    row,
                    self.columns.join(",")
                )));
            }
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        Ok(out)
    }
}

/// Output directory that replaces files atomically.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes to a temporary file in the same directory, then renames it over
    /// `name`, so readers never observe a partial artifact.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let target = self.path(name);
        let io = |source| CliError::Io {
            path: target.clone(),
            source,
        };
        let mut tmp = NamedTempFile::new_in(&self.root).map_err(io)?;
        tmp.write_all(contents.as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&target).map_err(|e| io(e.error))?;
        self.written.push(target.clone());
        Ok(target)
    }

    pub fn write_table(
        &mut self,
        name: &str,
        table: &Table,
        meta: &RunMeta,
        extra: &[(&str, String)],
    ) -> Result<PathBuf, CliError> {
        let csv = table.to_csv(meta, extra)?;
        self.write(name, &csv)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::NonFinite(format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// Parses a CSV written by [`Table::to_csv`] back into metadata and a table.
pub fn read_table(text: &str) -> Result<(BTreeMap<String, String>, Table), CliError> {
    let mut meta = BTreeMap::new();
    let mut table: Option<Table> = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        match table.as_mut() {
            None => table = Some(Table::new(line.split(','))),
            Some(t) => {
                let row = line
                    .split(',')
                    .map(|v| v.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Usage(format!("bad csv row `{line}`")))?;
                if row.len() != t.columns.len() {
                    return Err(CliError::Usage(format!("ragged csv row `{line}`")));
                }
                t.rows.push(row);
            }
        }
    }
    let table = table.ok_or_else(|| CliError::Usage("csv without header".into()))?;
    Ok((meta, table))
}
