//! Output files and the manifest tying them to their inputs.
//!
//! Data files are named `<command>-<hash>-s<seed>-<stem>.<ext>`, where the
//! hash covers the resolved configuration and command arguments, so equal
//! inputs give equal names and equal bytes. Only the manifest carries the
//! wall-clock timestamp, in its file name and in one field.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub timestamp: String,
    /// Everything needed to rerun the command.
    pub inputs: serde_json::Value,
    pub files: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Short hash of a JSON value; object keys serialize sorted, so the
/// encoding is canonical.
pub fn input_hash(inputs: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(inputs).expect("json value serializes");
    sha256_hex(&bytes)[..12].to_string()
}

/// One command's outputs; dropping it without `finish` leaves no manifest.
pub struct Run {
    command: String,
    seed: u64,
    hash: String,
    inputs: serde_json::Value,
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Run {
    pub fn new(command: &str, inputs: serde_json::Value, seed: u64, dir: &Path) -> Result<Self, PersistError> {
        std::fs::create_dir_all(dir).map_err(|source| PersistError::Io { path: dir.to_path_buf(), source })?;
        Ok(Run { command: command.to_string(), seed, hash: input_hash(&inputs), inputs, dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn path_for(&self, stem: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{}-{}-s{}-{stem}.{ext}", self.command, self.hash, self.seed))
    }

    fn write_bytes(&mut self, path: PathBuf, bytes: &[u8]) -> Result<PathBuf, PersistError> {
        let mut f = File::create(&path).map_err(|source| PersistError::Io { path: path.clone(), source })?;
        f.write_all(bytes).map_err(|source| PersistError::Io { path: path.clone(), source })?;
        let name = path.file_name().expect("file path").to_string_lossy().into_owned();
        self.files.retain(|o| o.file != name);
        self.files.push(OutputFile { file: name, sha256: sha256_hex(bytes) });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, stem: &str, value: &T) -> Result<PathBuf, PersistError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("output serializes");
        bytes.push(b'\n');
        let path = self.path_for(stem, "json");
        self.write_bytes(path, &bytes)
    }

    pub fn write_csv(&mut self, stem: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, PersistError> {
        let path = self.path_for(stem, "csv");
        let csv_err = |source| PersistError::Csv { path: path.clone(), source };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| PersistError::Io { path: path.clone(), source: e.into_error() })?;
        self.write_bytes(path, &bytes)
    }

    /// Write the manifest and return its path.
    pub fn finish(self) -> Result<PathBuf, PersistError> {
        let now = chrono::Utc::now();
        let manifest = Manifest {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario_hash: self.hash.clone(),
            seed: self.seed,
            timestamp: now.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            inputs: self.inputs,
            files: self.files,
        };
        let path = self.dir.join(format!(
            "{}-{}-s{}-{}.manifest.json",
            self.command,
            self.hash,
            self.seed,
            now.format("%Y%m%dT%H%M%S%.3fZ")
        ));
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|source| PersistError::Io { path: path.clone(), source })?;
        Ok(path)
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest, PersistError> {
    let text = std::fs::read_to_string(path).map_err(|e| PersistError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| PersistError::Read { path: path.to_path_buf(), message: e.to_string() })
}

/// Plain float formatting that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = Run::new("demo", serde_json::json!({"a": 1}), 7, dir.path()).unwrap();
        let a = run.write_json("summary", &serde_json::json!({"x": 1.5})).unwrap();
        let b = run.write_csv("series", &["t", "x"], &[vec![num(0.0), num(0.1)]]).unwrap();
        let m = read_manifest(&run.finish().unwrap()).unwrap();
        let names: Vec<_> = m.files.iter().map(|f| f.file.clone()).collect();
        for p in [a, b] {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            assert!(names.contains(&name));
            assert!(name.starts_with(&format!("demo-{}-s7-", m.scenario_hash)));
            let bytes = std::fs::read(&p).unwrap();
            let entry = m.files.iter().find(|f| f.file == name).unwrap();
            assert_eq!(entry.sha256, sha256_hex(&bytes));
        }
    }

    #[test]
    fn hash_depends_on_inputs_only() {
        let x = serde_json::json!({"b": 2, "a": [1.0, 2.0]});
        let y: serde_json::Value = serde_json::from_str(r#"{"a": [1.0, 2.0], "b": 2}"#).unwrap();
        assert_eq!(input_hash(&x), input_hash(&y));
        assert_ne!(input_hash(&x), input_hash(&serde_json::json!({"b": 3, "a": [1.0, 2.0]})));
    }

    #[test]
    fn unwritable_directory_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let err = Run::new("demo", serde_json::json!({}), 0, &blocker.join("sub")).err().unwrap();
        assert!(err.to_string().contains("file/sub"), "{err}");
    }

    #[test]
    fn floats_round_trip_through_text() {
        for v in [0.1, 1.0 / 3.0, -2.5e-17, 147.15] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
