//! Output-directory plumbing: atomic file writes (temp + rename) and shared
//! float formatting so repeated runs produce byte-identical artifacts.

use anyhow::Context;
use std::path::{Path, PathBuf};

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes atomically: a temp file in the same directory, then rename.
    pub fn write(&self, name: &str, contents: &[u8]) -> anyhow::Result<PathBuf> {
        let final_path = self.path(name);
        let tmp_path = self.root.join(format!(".{name}.tmp"));
        std::fs::write(&tmp_path, contents)
            .with_context(|| format!("writing {}", tmp_path.display()))?;
        std::fs::rename(&tmp_path, &final_path)
            .with_context(|| format!("renaming into {}", final_path.display()))?;
        Ok(final_path)
    }
}

/// Fixed six-fraction-digit form used across CSV outputs.
pub fn num(v: f64) -> String {
    format!("{v:.6}")
}

/// Optional value: empty field when absent.
pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
