//! CSV and JSON writers and the hashed file manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kslab_core::MassFunction;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::LabError;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// CSV text with a header row and LF line endings.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// The `s,W` table of one snapshot.
pub fn snapshot_csv(w: &MassFunction) -> String {
    csv(&["s", "W"], w.nodes().iter().zip(w.values()).map(|(&s, &v)| [s, v]))
}

pub fn snapshot_name(time: f64) -> String {
    format!("snapshot_t{time:.9}.csv")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory, with `/` separators.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// An output directory that records every file it writes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, LabError> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, contents: &[u8]) -> Result<(), LabError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), LabError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::Config(e.to_string()))?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `manifest.json` listing every other file with its hash.
    pub fn finish<T: Serialize>(self, command: &str, status: &Status, details: &T) -> Result<PathBuf, LabError> {
        let manifest = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            status: status.clone(),
            details,
            files: self.files,
        };
        let path = self.root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| LabError::Config(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Failed { exit_code: i32, message: String },
}

#[derive(Debug, Serialize)]
struct Manifest<'a, T: Serialize> {
    command: String,
    version: String,
    status: Status,
    details: &'a T,
    files: Vec<FileEntry>,
}

/// Recomputes every hash listed in `manifest.json`; returns the mismatching paths.
pub fn verify_manifest(root: &Path) -> Result<Vec<String>, LabError> {
    #[derive(serde::Deserialize)]
    struct Listed {
        files: Vec<FileEntry>,
    }
    let text = fs::read_to_string(root.join("manifest.json"))?;
    let listed: Listed = serde_json::from_str(&text).map_err(|e| LabError::Config(e.to_string()))?;
    let mut bad = Vec::new();
    for f in listed.files {
        match fs::read(root.join(&f.path)) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 && bytes.len() as u64 == f.bytes => {}
            _ => bad.push(f.path),
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, 123456.789e10, -5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_shape() {
        let text = csv(&["s", "W"], [[0.0, 1.0], [0.5, 2.0]]);
        assert_eq!(text, "s,W\n0.0000000000000000e0,1.0000000000000000e0\n5.0000000000000000e-1,2.0000000000000000e0\n");
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(snapshot_name(0.001), "snapshot_t0.001000000.csv");
        assert_eq!(snapshot_name(0.0), "snapshot_t0.000000000.csv");
    }
}
