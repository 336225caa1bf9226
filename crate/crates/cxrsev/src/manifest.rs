//! Run manifest: every input with its SHA-256, every parameter and seed, and
//! any step that failed. Enough to rerun a report from scratch.

use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{read_file, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(role: &str, path: &Path) -> Result<InputDigest> {
    let bytes = read_file(path)?;
    Ok(InputDigest {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub command: String,
    pub date: String,
    pub parameters: Map<String, Value>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    /// (step, message)
    pub failures: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, date: &str) -> Self {
        Manifest {
            command: command.to_string(),
            date: date.to_string(),
            ..Default::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    pub fn fail(&mut self, step: &str, message: impl ToString) {
        self.failures.push((step.to_string(), message.to_string()));
    }

    pub fn to_json(&self) -> String {
        let doc = json!({
            "tool": "cxrsev",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "date": self.date,
            "parameters": self.parameters,
            "inputs": self.inputs.iter().map(|d| json!({
                "role": d.role,
                "path": d.path,
                "sha256": d.sha256,
                "bytes": d.bytes,
            })).collect::<Vec<_>>(),
            "outputs": self.outputs,
            "failures": self.failures.iter().map(|(s, m)| json!({"step": s, "error": m})).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("manifest serialises");
        s.push('\n');
        s
    }
}
