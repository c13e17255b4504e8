use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    /// Path relative to the manifest's directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Files written into one scenario directory.
#[derive(Debug)]
pub struct ArtifactDir {
    root: PathBuf,
    prefix: String,
    entries: Vec<FileEntry>,
}

impl ArtifactDir {
    /// `root` is the manifest directory; files land in `root/prefix`.
    pub fn create(root: &Path, prefix: &str) -> Result<Self, CliError> {
        fs::create_dir_all(root.join(prefix))?;
        Ok(ArtifactDir { root: root.to_path_buf(), prefix: prefix.to_string(), entries: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let rel = if self.prefix.is_empty() { name.to_string() } else { format!("{}/{name}", self.prefix) };
        fs::write(self.root.join(&rel), bytes)?;
        self.entries.push(FileEntry { path: rel, sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Renders CSV through a writer callback.
    pub fn write_csv<F>(&mut self, name: &str, render: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn into_entries(self) -> Vec<FileEntry> {
        self.entries
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: String,
    pub config: C,
    pub files: Vec<FileEntry>,
}

/// Writes `manifest.json` into `root`. Entries are sorted by path.
pub fn write_manifest<C: Serialize>(root: &Path, mut manifest: Manifest<'_, C>) -> Result<PathBuf, CliError> {
    manifest.files.sort_by(|a, b| a.path.cmp(&b.path));
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    let path = root.join("manifest.json");
    fs::write(&path, bytes)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_hashes() {
        let tmp = tempfile::tempdir().unwrap();
        let mut d = ArtifactDir::create(tmp.path(), "a").unwrap();
        d.write("x.txt", b"abc").unwrap();
        let e = d.into_entries();
        assert_eq!(e[0].path, "a/x.txt");
        assert_eq!(e[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(fs::read(tmp.path().join("a/x.txt")).unwrap(), b"abc");
    }
}
