//! Deterministic artifact writing: atomic files, LF-terminated CSV and the
//! per-run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Locale-independent float text; non-finite values are spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Accumulates rows and renders them as comma-separated text with LF endings.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, &self.to_bytes()?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// SHA-256 digests of every input a run reads, keyed by path as given.
#[derive(Default)]
pub struct Inputs {
    digests: BTreeMap<String, String>,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        self.digests
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a Value,
    seed: u64,
    tool_version: &'static str,
    inputs: &'a BTreeMap<String, String>,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    details: Value,
}

/// Output sink of one run: files land in a single place and the manifest
/// lists them.
pub struct Run {
    command: String,
    config: Value,
    seed: u64,
    pub inputs: Inputs,
    outputs: Vec<String>,
    details: Value,
}

impl Run {
    pub fn new(command: &str, config: Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed,
            inputs: Inputs::default(),
            outputs: Vec::new(),
            details: Value::Null,
        }
    }

    pub fn set_details(&mut self, details: Value) {
        self.details = details;
    }

    fn record(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn table(&mut self, path: &Path, t: &Table) -> CliResult<()> {
        t.write(path)?;
        self.record(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, path: &Path, value: &T) -> CliResult<()> {
        write_json(path, value)?;
        self.record(path);
        Ok(())
    }

    pub fn bytes(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        write_atomic(path, bytes)?;
        self.record(path);
        Ok(())
    }

    /// Writes the manifest to `path`; it is never listed among the outputs.
    pub fn finish(mut self, path: &Path) -> CliResult<()> {
        self.outputs.sort();
        let m = Manifest {
            command: &self.command,
            config: &self.config,
            seed: self.seed,
            tool_version: TOOL_VERSION,
            inputs: &self.inputs.digests,
            outputs: self.outputs,
            details: self.details,
        };
        write_json(path, &m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf_and_quotes_when_needed() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x,y".into(), num(0.5)]);
        t.push(vec!["z".into(), num(f64::INFINITY)]);
        assert_eq!(t.to_bytes().unwrap(), b"a,b\n\"x,y\",0.5\nz,inf\n");
    }

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
