//! Output staging and run manifests.
//!
//! A command writes into a hidden sibling of its output directory. Only when
//! it succeeds is the manifest added and the directory renamed into place, so
//! a failed run leaves nothing behind.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    /// SHA-256 of every output file, keyed by its path inside the output
    /// directory.
    pub outputs: BTreeMap<String, String>,
    pub workers: usize,
    pub wall_time_secs: f64,
}

pub struct Staging {
    target: PathBuf,
    tmp: PathBuf,
    started: Instant,
    committed: bool,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self> {
        if target.exists() {
            let empty = target.is_dir() && fs::read_dir(target)?.next().is_none();
            if !empty {
                bail!(crate::UsageError(format!(
                    "output directory {} already exists and is not empty",
                    target.display()
                )));
            }
        }
        let name = target
            .file_name()
            .ok_or_else(|| crate::UsageError(format!("invalid output path {}", target.display())))?
            .to_string_lossy()
            .into_owned();
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        let tmp = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        Ok(Self {
            target: target.to_path_buf(),
            tmp,
            started: Instant::now(),
            committed: false,
        })
    }

    /// Where to write `rel` while the run is in progress.
    pub fn path(&self, rel: &str) -> PathBuf {
        self.tmp.join(rel)
    }

    pub fn commit(mut self, mut manifest: RunManifest) -> Result<()> {
        manifest.outputs = hash_tree(&self.tmp)?;
        manifest.wall_time_secs = self.started.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&manifest)?;
        learned_dtw::io::write_bytes_atomic(&self.tmp.join(MANIFEST_NAME), text.as_bytes())?;
        if self.target.exists() {
            fs::remove_dir(&self.target).with_context(|| format!("replacing {}", self.target.display()))?;
        }
        fs::rename(&self.tmp, &self.target)
            .with_context(|| format!("moving outputs into {}", self.target.display()))?;
        self.committed = true;
        log::info!("wrote {}", self.target.display());
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

fn hash_tree(root: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("inside root").to_string_lossy().replace('\\', "/");
                out.insert(rel, sha256_file(&path)?);
            }
        }
    }
    Ok(out)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
