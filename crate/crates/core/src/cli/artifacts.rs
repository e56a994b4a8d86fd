use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;

/// Each command keeps its own manifest so runs can share a directory.
pub fn manifest_name(command: &str) -> String {
    format!("{command}.manifest.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub artifacts: Vec<ArtifactEntry>,
}

impl Manifest {
    pub fn read(dir: &Path, command: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(dir.join(manifest_name(command))).map_err(|e| CliError::data("report", format!("{}: {e}", dir.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::data("report", format!("manifest: {e}")))
    }
}

/// Files written by one run. Dropped without `commit`, it deletes them.
pub struct ArtifactSet {
    dir: PathBuf,
    written: Vec<(String, String)>,
    committed: bool,
    created_dir: bool,
}

impl ArtifactSet {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        std::fs::create_dir_all(dir).map_err(|e| CliError::internal("cli", format!("{}: {e}", dir.display())))?;
        Ok(ArtifactSet {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
            created_dir,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let bytes = bytes.as_ref();
        std::fs::write(self.path(name), bytes).map_err(|e| CliError::internal("cli", format!("writing {name}: {e}")))?;
        self.record(name, bytes);
        Ok(())
    }

    /// Registers a file produced by some other writer.
    pub fn adopt(&mut self, name: &str) -> Result<(), CliError> {
        let bytes = std::fs::read(self.path(name)).map_err(|e| CliError::internal("cli", format!("reading {name}: {e}")))?;
        self.record(name, &bytes);
        Ok(())
    }

    fn record(&mut self, name: &str, bytes: &[u8]) {
        let digest = hex::encode(Sha256::digest(bytes));
        self.written.retain(|(n, _)| n != name);
        self.written.push((name.to_string(), digest));
    }

    /// Writes the manifest and keeps every artifact.
    pub fn commit(mut self, command: &str, config_hash: String, seed: u64) -> Result<Manifest, CliError> {
        let mut artifacts: Vec<ArtifactEntry> = self
            .written
            .iter()
            .map(|(path, sha256)| ArtifactEntry {
                path: path.clone(),
                sha256: sha256.clone(),
            })
            .collect();
        artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            command: command.to_string(),
            config_hash,
            seed,
            artifacts,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
        std::fs::write(self.path(&manifest_name(command)), text).map_err(|e| CliError::internal("cli", format!("writing manifest: {e}")))?;
        self.committed = true;
        Ok(manifest)
    }
}

impl Drop for ArtifactSet {
    fn drop(&mut self) {
        if !self.committed {
            for (name, _) in &self.written {
                let _ = std::fs::remove_file(self.dir.join(name));
            }
            if self.created_dir {
                // Fails harmlessly if anything else landed there.
                let _ = std::fs::remove_dir(&self.dir);
            }
        }
    }
}

/// Lower-case file stem for a method name: `HeteSim MP` -> `hetesim_mp`.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}
