//! Per-run context: hashed inputs, recorded outputs, seeded randomness and
//! the manifest that reproduces the run.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Pipeline;

pub const MANIFEST_NAME: &str = "manifest.json";

/// How a pipeline finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    PropertyFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::PropertyFailure => 2,
        }
    }

    pub fn from_check(passed: bool) -> Self {
        if passed {
            Status::Ok
        } else {
            Status::PropertyFailure
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub pipeline: Pipeline,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub status: Status,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Run {
    out: PathBuf,
    seed: u64,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
}

impl Run {
    pub fn new(out: &Path, seed: u64) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
        Ok(Run { out: out.to_path_buf(), seed, inputs: Vec::new(), outputs: Vec::new() })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for one named component: the run seed and the name are
    /// hashed together, so components never share a stream.
    pub fn rng(&self, component: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(component.as_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    pub fn read_bytes(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileRecord { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    pub fn read_json<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let bytes = self.read_bytes(path)?;
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
    }

    /// Writes `name` inside the output directory.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(FileRecord { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, pipeline: &Pipeline, status: Status) -> Result<Manifest> {
        let manifest = Manifest {
            tool: "cyclos".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: self.seed,
            pipeline: pipeline.clone(),
            inputs: self.inputs,
            outputs: self.outputs,
            status,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.out.join(MANIFEST_NAME), text)?;
        Ok(manifest)
    }
}

/// Checks that every recorded input still has its recorded hash.
pub fn verify_inputs(m: &Manifest) -> Result<()> {
    for rec in &m.inputs {
        let bytes = fs::read(&rec.path).with_context(|| format!("reading recorded input {}", rec.path))?;
        let got = sha256_hex(&bytes);
        if got != rec.sha256 {
            bail!("input {} changed since the recorded run (sha256 {} != {})", rec.path, got, rec.sha256);
        }
    }
    Ok(())
}
