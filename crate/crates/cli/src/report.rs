use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

pub const TOOL: &str = "qplateau";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Envelope shared by every JSON report. Nothing here depends on wall time,
/// output location or thread count, so reruns compare byte for byte.
#[derive(Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: String,
    pub seed: u64,
    pub level: u32,
    pub config: &'a C,
    pub result: R,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn render<C: Serialize, R: Serialize>(command: &str, seed: u64, level: u32, config: &C, result: R) -> Result<String, Failure> {
    let canonical = serde_json::to_string(config).map_err(|e| Failure::invalid(e.to_string()))?;
    let report = Report {
        tool: TOOL,
        version: VERSION,
        command,
        config_sha256: sha256_hex(canonical.as_bytes()),
        seed,
        level,
        config,
        result,
    };
    let mut s = serde_json::to_string_pretty(&report).map_err(|e| Failure::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(path).map_err(|e| Failure::invalid(format!("cannot create {}: {e}", path.display())))?;
        let abs = path
            .canonicalize()
            .map_err(|e| Failure::invalid(format!("cannot resolve {}: {e}", path.display())))?;
        Ok(Self(abs))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        let p = self.0.join(name);
        fs::write(&p, contents).map_err(|e| Failure::invalid(format!("cannot write {}: {e}", p.display())))?;
        eprintln!("wrote {}", p.display());
        Ok(p)
    }
}

/// Reads an input file after resolving it to an absolute path.
pub fn read_input(path: &Path) -> Result<(PathBuf, String), Failure> {
    let abs = path
        .canonicalize()
        .map_err(|e| Failure::invalid(format!("cannot resolve {}: {e}", path.display())))?;
    let text = fs::read_to_string(&abs).map_err(|e| Failure::invalid(format!("cannot read {}: {e}", abs.display())))?;
    Ok((abs, text))
}
