//! Run manifests: one immutable `manifest.json` per run directory with
//! the resolved config, the seed, content hashes of the checkpoints the
//! run consumed and produced, and timestamps.

use crate::CliError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct CheckpointRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub consumed_checkpoint: Option<CheckpointRef>,
    pub produced_checkpoints: Vec<CheckpointRef>,
    pub created_at: String,
    pub finished_at: String,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Runtime(format!("hash {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

pub fn checkpoint_ref(path: &Path) -> Result<CheckpointRef, CliError> {
    Ok(CheckpointRef { path: path.display().to_string(), sha256: sha256_file(path)? })
}

/// Prepare a run directory. Refuses to reuse a directory that already
/// holds a manifest unless `force` is set; manifests are immutable.
pub fn prepare_run_dir(dir: &Path, force: bool) -> Result<PathBuf, CliError> {
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() && !force {
        return Err(CliError::Config(format!(
            "{} already contains a manifest; pick another --out or pass --force",
            dir.display()
        )));
    }
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", dir.display())))?;
    Ok(manifest_path)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Runtime(format!("serialize manifest: {e}")))?;
    std::fs::write(path, json + "\n")
        .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
    Ok(())
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_to_overwrite_a_manifest_without_force() {
        let dir = tempfile::tempdir().unwrap();
        let path = prepare_run_dir(dir.path(), false).unwrap();
        let manifest = Manifest {
            command: "train".into(),
            config: serde_json::json!({}),
            seed: 1,
            consumed_checkpoint: None,
            produced_checkpoints: vec![],
            created_at: now_rfc3339(),
            finished_at: now_rfc3339(),
        };
        write_manifest(&path, &manifest).unwrap();
        assert!(matches!(prepare_run_dir(dir.path(), false), Err(CliError::Config(_))));
        assert!(prepare_run_dir(dir.path(), true).is_ok());
    }

    #[test]
    fn file_hashes_are_stable_hex() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("x");
        std::fs::write(&file, b"abc").unwrap();
        let h = sha256_file(&file).unwrap();
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
