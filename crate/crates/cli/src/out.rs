use std::fs;
use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};

/// Every file the CLI writes goes through here, so nothing lands outside the output dir.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// Resolves a relative name under the root, rejecting absolute paths and `..`.
    pub fn path(&self, name: &Path) -> Result<PathBuf> {
        if name.as_os_str().is_empty() {
            bail!("empty output name");
        }
        for c in name.components() {
            if !matches!(c, Component::Normal(_) | Component::CurDir) {
                bail!(
                    "output name {} must be relative and stay inside the output dir",
                    name.display()
                );
            }
        }
        Ok(self.root.join(name))
    }

    pub fn write(&self, name: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name.as_ref())?;
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
