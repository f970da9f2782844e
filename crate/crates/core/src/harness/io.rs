//! Artifact files: CSV tables, JSON summaries, binary state snapshots and
//! the run manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a CSV
//! value parses back to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::StateVector;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"CGLSNAP\0";
pub const SNAPSHOT_VERSION: u32 = 1;
const SNAPSHOT_HEADER: usize = 8 + 4 + 4 + 8 + 8;

/// A state together with its position on the time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub time: f64,
    pub state: StateVector,
}

impl Snapshot {
    /// Layout (little endian): magic, `u32` version, `u32` modes, `u64`
    /// step, `f64` time, then `(re, im)` pairs of `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.state.len();
        let mut out = Vec::with_capacity(SNAPSHOT_HEADER + 16 * n);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        for c in self.state.coeffs() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < SNAPSHOT_HEADER || &bytes[..8] != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("missing CGLSNAP header".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let n = u32_at(12) as usize;
        let expected = SNAPSHOT_HEADER + 16 * n;
        if bytes.len() != expected {
            return Err(Error::Snapshot(format!(
                "expected {expected} bytes for {n} modes, found {}",
                bytes.len()
            )));
        }
        let coeffs = (0..n)
            .map(|j| {
                let at = SNAPSHOT_HEADER + 16 * j;
                Complex64::new(f64_at(at), f64_at(at + 8))
            })
            .collect();
        Ok(Snapshot {
            step: u64_at(16),
            time: f64_at(24),
            state: StateVector::from_coeffs(coeffs),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Writes a header and rows of floats.
pub fn write_float_csv<'a, I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    let mut buf = Vec::with_capacity(header.len());
    for row in rows {
        buf.clear();
        buf.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&buf)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes serialisable records (header from the field names).
pub fn write_records_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// One produced file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub role: String,
}

/// Index of one run's outputs; the only file not listed in itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub version: String,
    pub seed: u64,
    pub files: Vec<Artifact>,
    pub warnings: Vec<String>,
    /// Per-part timings in seconds; excluded from the numeric artifacts so
    /// that reruns stay byte-identical.
    pub timings: Vec<(String, f64)>,
    pub wall_time_s: f64,
    pub started_unix_s: u64,
    pub threads: usize,
    pub passed: Option<bool>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESOLVED_CONFIG_FILE: &str = "resolved.cfg";

/// Single owner of an output directory during a run.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Registers `name` and returns its full path.
    pub fn path(&mut self, name: &str, role: &str) -> PathBuf {
        if let Some(a) = self.files.iter_mut().find(|a| a.file == name) {
            a.role = role.to_string();
        } else {
            self.files.push(Artifact {
                file: name.to_string(),
                role: role.to_string(),
            });
        }
        self.dir.join(name)
    }

    pub fn text(&mut self, name: &str, role: &str, contents: &str) -> Result<()> {
        let p = self.path(name, role);
        std::fs::write(&p, contents).map_err(|e| Error::io(&p, e))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, role: &str, value: &T) -> Result<()> {
        let p = self.path(name, role);
        write_json(&p, value)
    }

    pub fn files(&self) -> &[Artifact] {
        &self.files
    }

    pub fn finish(self, mut manifest: Manifest) -> Result<Manifest> {
        manifest.files = self.files;
        write_json(&self.dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let state = StateVector::from_coeffs(vec![Complex64::new(1.5, -0.25), Complex64::new(f64::MIN_POSITIVE, 3e300)]);
        let snap = Snapshot {
            step: 42,
            time: 0.42,
            state,
        };
        let bytes = snap.to_bytes();
        assert_eq!(bytes.len(), 32 + 32);
        assert_eq!(Snapshot::from_bytes(&bytes).unwrap(), snap);
    }

    #[test]
    fn snapshot_rejects_garbage() {
        assert!(matches!(Snapshot::from_bytes(b"nope"), Err(Error::Snapshot(_))));
        let mut bytes = Snapshot {
            step: 0,
            time: 0.0,
            state: StateVector::zeros(2),
        }
        .to_bytes();
        bytes.pop();
        assert!(matches!(Snapshot::from_bytes(&bytes), Err(Error::Snapshot(_))));
        bytes.push(0);
        bytes[8] = 9;
        assert!(matches!(Snapshot::from_bytes(&bytes), Err(Error::Snapshot(_))));
    }

    #[test]
    fn csv_floats_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        let row = [0.1 + 0.2, 1.0 / 3.0, -2.5e-300, 1e21];
        write_float_csv(&p, &["a".into(), "b".into(), "c".into(), "d".into()], [&row[..]]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let line = text.lines().nth(1).unwrap();
        let back: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(back, row);
    }
}
