use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::numerics::sha256_hex;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOG_FILE: &str = "reports/log.txt";
pub const LISTING_FILE: &str = "reports/plan.txt";

/// Run directory:
///
/// ```text
/// <out>/datasets/   intermediate and exported datasets (CSV)
/// <out>/functions/  learned and exported functions (function artifacts)
/// <out>/reports/    score and training reports, plan listing, log
/// <out>/manifest.json
/// ```
///
/// Artifacts are write-once. Writes are serialized through an internal lock.
#[derive(Debug)]
pub struct ArtifactStore {
    root: PathBuf,
    lock: Mutex<()>,
}

impl ArtifactStore {
    /// Creates the layout under `root`, which must be absent or empty.
    pub fn create(root: &Path) -> io::Result<Self> {
        if root.exists() && fs::read_dir(root)?.next().is_some() {
            return Err(io::Error::new(
                io::ErrorKind::AlreadyExists,
                format!("output directory {} is not empty", root.display()),
            ));
        }
        for sub in ["datasets", "functions", "reports"] {
            fs::create_dir_all(root.join(sub))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
            lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes a new artifact and returns its SHA-256.
    pub fn write(&self, rel: &str, bytes: &[u8]) -> io::Result<String> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(self.root.join(rel))?;
        f.write_all(bytes)?;
        f.sync_all()?;
        Ok(sha256_hex(bytes))
    }

    pub fn append_log(&self, line: &str) -> io::Result<()> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.root.join(LOG_FILE))?;
        writeln!(f, "{line}")
    }

    /// Writes the manifest through a temporary file and a rename, so a
    /// reader sees either no manifest or a complete one.
    pub fn finalize(&self, manifest_json: &[u8]) -> io::Result<()> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let tmp = self.root.join(format!("{MANIFEST_FILE}.tmp"));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(manifest_json)?;
            f.sync_all()?;
        }
        fs::rename(tmp, self.root.join(MANIFEST_FILE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_once() {
        let dir = tempfile::tempdir().unwrap();
        let store = ArtifactStore::create(&dir.path().join("run")).unwrap();
        let h = store.write("reports/a.json", b"{}").unwrap();
        assert_eq!(h, sha256_hex(b"{}"));
        let err = store.write("reports/a.json", b"{}").unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::AlreadyExists);
    }

    #[test]
    fn refuses_non_empty_root() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x"), b"1").unwrap();
        assert!(ArtifactStore::create(dir.path()).is_err());
    }
}
