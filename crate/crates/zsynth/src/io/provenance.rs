//! Machine-readable run record. No timestamps, so identical runs produce
//! identical records.

use crate::io::config::RunConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub args: Vec<String>,
    pub inputs: Vec<InputHash>,
    pub config: RunConfig,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> std::io::Result<InputHash> {
    let bytes = std::fs::read(path)?;
    Ok(InputHash { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
}

impl Provenance {
    pub fn new(subcommand: &str, args: &[String], config: &RunConfig) -> Self {
        Provenance {
            tool: "zsynth",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.into(),
            args: args.to_vec(),
            inputs: vec![],
            config: config.clone(),
            outputs: vec![],
        }
    }
}
