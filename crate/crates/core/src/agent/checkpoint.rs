use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::Architecture;
use crate::error::{io_err, Error, Result};
use crate::ltl::{parse, Closure, SymbolTable};

pub const CHECKPOINT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const PARAMS: &str = "params.bin";

/// Everything needed to rebuild an agent except the raw parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub version: u32,
    pub architecture: Architecture,
    pub symbols: SymbolTable,
    /// Closure formulas in embedding-row order.
    pub closure: Vec<String>,
    pub n_params: usize,
    pub seed: u64,
    pub update: usize,
    pub steps: u64,
    pub level: usize,
    /// Resolved run configuration, stored verbatim.
    pub config: serde_json::Value,
}

impl CheckpointManifest {
    pub fn closure(&self) -> Result<Closure> {
        let members = self.closure.iter().map(|s| parse(s, &self.symbols)).collect::<Result<Vec<_>, _>>()?;
        Ok(Closure::from_members(members))
    }
}

/// Writes `manifest.json` and little-endian `params.bin` into `dir`.
pub fn save_checkpoint(dir: &Path, manifest: &CheckpointManifest, params: &[f64]) -> Result<()> {
    if params.len() != manifest.n_params {
        return Err(Error::CheckpointMismatch(format!("{} parameters for a manifest of {}", params.len(), manifest.n_params)));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json = serde_json::to_vec_pretty(manifest)?;
    let path = dir.join(MANIFEST);
    fs::write(&path, json).map_err(io_err(&path))?;
    let bytes: Vec<u8> = params.iter().flat_map(|p| p.to_le_bytes()).collect();
    let path = dir.join(PARAMS);
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<(CheckpointManifest, Vec<f64>)> {
    let path = dir.join(MANIFEST);
    let text = fs::read(&path).map_err(io_err(&path))?;
    let mut manifest: CheckpointManifest = serde_json::from_slice(&text)?;
    if manifest.version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointMismatch(format!("version {} (expected {CHECKPOINT_VERSION})", manifest.version)));
    }
    manifest.symbols.reindex();
    let path = dir.join(PARAMS);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    if bytes.len() != manifest.n_params * 8 {
        return Err(Error::CheckpointMismatch(format!("{} parameter bytes for {} parameters", bytes.len(), manifest.n_params)));
    }
    let params = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((manifest, params))
}
