//! Output staging and run manifests.
//!
//! Files are written under temporary names and renamed into place only when
//! the whole command has succeeded; otherwise every staged file is removed.

use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(role: &str, path: &Path) -> Result<Self> {
        let (sha256, bytes) = sha256_file(path)?;
        Ok(Self {
            role: role.into(),
            path: path.display().to_string(),
            sha256,
            bytes,
        })
    }
}

/// Provenance for one command run. Holds nothing that varies between
/// identical runs (no timestamps, no output directory, no thread count).
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub struct Outputs {
    dir: PathBuf,
    /// `(temporary path, final name)` in staging order.
    staged: Vec<(PathBuf, String)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
        })
    }

    /// Temporary path to write `name` to; it is renamed on [`commit`](Self::commit).
    pub fn stage(&mut self, name: &str) -> PathBuf {
        let tmp = self.dir.join(format!(".{name}.partial"));
        self.staged.push((tmp.clone(), name.to_string()));
        tmp
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let tmp = self.stage(name);
        fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))
    }

    /// Writes `{command}.manifest.json` listing every staged output, then
    /// moves all files into place. Returns the final paths.
    pub fn commit(
        mut self,
        command: &'static str,
        config: &RunConfig,
        inputs: Vec<FileDigest>,
    ) -> Result<Vec<PathBuf>> {
        let mut outputs = Vec::with_capacity(self.staged.len());
        for (tmp, name) in &self.staged {
            let (sha256, bytes) = sha256_file(tmp)?;
            outputs.push(FileDigest {
                role: "output".into(),
                path: name.clone(),
                sha256,
                bytes,
            });
        }
        let manifest = Manifest {
            tool: "xldrift",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            inputs,
            outputs,
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        self.write(&format!("{command}.manifest.json"), text)?;

        let mut placed = Vec::with_capacity(self.staged.len());
        for (tmp, name) in &self.staged {
            let target = self.dir.join(name);
            if let Err(e) = fs::rename(tmp, &target) {
                for p in &placed {
                    let _ = fs::remove_file(p);
                }
                return Err(e).with_context(|| format!("moving output into {}", target.display()));
            }
            placed.push(target);
        }
        self.staged.clear();
        Ok(placed)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        for (tmp, _) in &self.staged {
            let _ = fs::remove_file(tmp);
        }
    }
}
