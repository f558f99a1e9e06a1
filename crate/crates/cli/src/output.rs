//! Output directories are staged next to their destination and renamed into
//! place once the command has succeeded.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::CliError;

pub struct Staged {
    pub dir: PathBuf,
    target: PathBuf,
}

impl Staged {
    /// Fails when `target` exists and is not an empty directory.
    pub fn new(target: &Path) -> Result<Self, CliError> {
        if target.exists() {
            let empty = target.is_dir() && fs::read_dir(target).map(|mut d| d.next().is_none()).unwrap_or(false);
            if !empty {
                return Err(CliError::Config(format!(
                    "output directory {} already exists and is not empty",
                    target.display()
                )));
            }
        }
        let name = target
            .file_name()
            .ok_or_else(|| CliError::Config(format!("output path {} has no directory name", target.display())))?;
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        let dir = parent.join(format!(".{}.partial-{}", name.to_string_lossy(), std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
        fs::create_dir(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            target: target.to_path_buf(),
        })
    }

    pub fn commit(self) -> Result<PathBuf, CliError> {
        if self.target.is_dir() {
            // only an empty directory can be here
            fs::remove_dir(&self.target).map_err(|e| CliError::Io(format!("{}: {e}", self.target.display())))?;
        }
        fs::rename(&self.dir, &self.target).map_err(|e| CliError::Io(format!("{}: {e}", self.target.display())))?;
        Ok(self.target.clone())
    }

    /// Leaves nothing behind when the command fails.
    pub fn discard(self) {
        let _ = fs::remove_dir_all(&self.dir);
    }
}

/// Provenance shared by every `run.json`.
pub fn run_record(command: &str, seed: Option<u64>, config: &Map<String, Value>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), Value::from(command));
    m.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    m.insert("seed".into(), seed.map_or(Value::Null, Value::from));
    m.insert("config".into(), Value::Object(config.clone()));
    m
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    qgraph::io::write_json(path, value).map_err(CliError::from)
}
