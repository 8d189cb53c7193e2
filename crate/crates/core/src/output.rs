//! Artifact writers: CSV tables with round-trip precision, versioned JSON
//! summaries and a run manifest listing every file with its hash.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Version of every JSON document written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip any `f64`. Non-finite values
/// are written as `nan`, `inf` or `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// A CSV table held in memory until written.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Dense matrix with columns `c0, c1, ...`.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut t = Table::new((0..m.ncols()).map(|j| format!("c{j}")));
        for i in 0..m.nrows() {
            t.push(m.row(i).iter().map(|&v| fmt_f64(v)).collect());
        }
        t
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// JSON document wrapped with the schema version.
#[derive(Serialize)]
pub struct Versioned<'a, T: Serialize> {
    pub schema_version: u32,
    pub kind: &'a str,
    #[serde(flatten)]
    pub body: &'a T,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub artifacts: Vec<ManifestEntry>,
}

/// Writes artifacts into one directory and records them for the manifest.
pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl ArtifactWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(path)
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<PathBuf> {
        self.write_bytes(name, &table.to_bytes()?)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, kind: &str, body: &T) -> Result<PathBuf> {
        let doc = Versioned { schema_version: SCHEMA_VERSION, kind, body };
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    /// Writes `manifest.json` listing every artifact in write order.
    pub fn finish<C: Serialize>(self, command: &str, config: &C) -> Result<Manifest> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config)?,
            artifacts: self.entries,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        std::fs::write(self.dir.join(MANIFEST_FILE), bytes)?;
        Ok(manifest)
    }
}

/// `<problem>_<form>_<sweep>.csv`
pub fn artifact_name(problem: &str, form: &str, sweep: &str, ext: &str) -> String {
    format!("{problem}_{form}_{sweep}.{ext}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let s = fmt_f64(v);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn non_finite_values() {
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_opt(None), "");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_quotes_text_cells() {
        let mut t = Table::new(["status", "x"]);
        t.push(vec!["error: a, b".into(), fmt_f64(0.5)]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "status,x\n\"error: a, b\",5.0000000000000000e-1\n");
    }

    #[test]
    fn manifest_lists_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path()).unwrap();
        w.write_bytes("a.csv", b"x\n1\n").unwrap();
        w.write_json("b.json", "test", &serde_json::json!({"v": 1})).unwrap();
        let m = w.finish("test", &serde_json::json!({})).unwrap();
        assert_eq!(m.artifacts.len(), 2);
        for e in &m.artifacts {
            let bytes = std::fs::read(dir.path().join(&e.path)).unwrap();
            assert_eq!(hex::encode(Sha256::digest(&bytes)), e.sha256);
        }
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(text.contains("\"schema_version\": 1"));
        let b = std::fs::read_to_string(dir.path().join("b.json")).unwrap();
        assert!(b.contains("\"schema_version\": 1") && b.contains("\"kind\": \"test\""));
    }
}
