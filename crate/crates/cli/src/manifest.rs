use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use scuc_core::network::IEEE24_JSON;
use scuc_core::GridCase;

use crate::CaseArgs;

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    /// Path as given, or `bundled:ieee24`.
    pub source: String,
    pub sha256: String,
}

impl InputFile {
    pub fn from_bytes(source: impl Into<String>, bytes: &[u8]) -> Self {
        Self {
            source: source.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Step {
    pub name: String,
    pub wall_time: f64,
}

/// Record of one command run: enough to reproduce every output except wall times.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, InputFile>,
    pub backend: Option<String>,
    pub deterministic_backend: Option<bool>,
    pub steps: Vec<Step>,
}

impl Manifest {
    pub fn new(command: &'static str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: serde_json::to_value(config)?,
            inputs: BTreeMap::new(),
            backend: None,
            deterministic_backend: None,
            steps: Vec::new(),
        })
    }

    /// Runs `f`, recording its wall time under `name`.
    pub fn step<T>(&mut self, name: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.steps.push(Step {
            name: name.into(),
            wall_time: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

pub fn load_case(args: &CaseArgs) -> Result<(GridCase, InputFile)> {
    match &args.case {
        None => Ok((
            GridCase::from_json_str(IEEE24_JSON)?,
            InputFile::from_bytes("bundled:ieee24", IEEE24_JSON.as_bytes()),
        )),
        Some(path) => {
            let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            let case = scuc_core::network::load_case(path)?;
            Ok((case, InputFile::from_bytes(path.display().to_string(), &bytes)))
        }
    }
}

pub fn hash_file(path: &Path) -> Result<InputFile> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(InputFile::from_bytes(path.display().to_string(), &bytes))
}
