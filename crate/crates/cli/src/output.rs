//! Output helpers: every file embeds the resolved configuration so a run can
//! be reproduced bit-exactly from its own artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Failure;

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// CSV with a `# {config-json}` provenance line, a header, then rows.
pub fn write_csv<C: Serialize>(
    path: &Path,
    config: &C,
    header: &str,
    rows: &str,
) -> Result<(), Failure> {
    let provenance = serde_json::to_string(config)?;
    fs::write(path, format!("# {provenance}\n{header}\n{rows}"))?;
    Ok(())
}

/// Pretty JSON document with the config inlined under "config".
pub fn write_json<C: Serialize, T: Serialize>(
    path: &Path,
    config: &C,
    body: &T,
) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Document<'a, C: Serialize, T: Serialize> {
        config: &'a C,
        #[serde(flatten)]
        body: &'a T,
    }
    let doc = Document { config, body };
    fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn join(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// FNV-1a over the serialized spec, for checkpoint provenance.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}
