//! Report files, buffered until the whole command has succeeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

/// Named file contents waiting to be committed.
#[derive(Default, Debug)]
pub struct Staged {
    files: Vec<(String, Vec<u8>)>,
}

impl Staged {
    pub fn new() -> Staged {
        Staged::default()
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    /// Runs a writer into a buffer and stages the result.
    pub fn add_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> starlanczos::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Writes every file through a temporary sibling and a rename.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let mut pending = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::Io(e.to_string()))?;
            tmp.write_all(bytes).map_err(|e| CliError::Io(e.to_string()))?;
            #[cfg(unix)]
            {
                use std::os::unix::fs::PermissionsExt;
                tmp.as_file()
                    .set_permissions(fs::Permissions::from_mode(0o644))
                    .map_err(|e| CliError::Io(e.to_string()))?;
            }
            tmp.as_file().sync_all().map_err(|e| CliError::Io(e.to_string()))?;
            pending.push((tmp, dir.join(name)));
        }
        let mut done = Vec::with_capacity(pending.len());
        for (tmp, target) in pending {
            tmp.persist(&target).map_err(|e| CliError::Io(format!("{}: {}", target.display(), e.error)))?;
            done.push(target);
        }
        Ok(done)
    }
}
