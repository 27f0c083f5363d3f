//! Output files are produced in memory first and then written with
//! write-then-rename, so a failed run leaves no torn or partial files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// One output file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) -> Self {
        Artifact {
            path: path.into(),
            bytes: bytes.into(),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn json<T: Serialize>(path: impl Into<PathBuf>, value: &T) -> Self {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        Artifact::new(path, text)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Internal(format!("no file name in {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::Input(format!(
            "cannot write {}: {e}",
            path.display()
        )));
    }
    Ok(())
}

/// Writes every artifact under `root`. Nothing is written unless all
/// artifacts were produced, since callers only get here with a full set.
pub fn write_all(root: &Path, artifacts: &[Artifact]) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = root.join(&a.path);
        write_atomic(&path, &a.bytes)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Internal(format!("stdout: {e}"))),
    }
}
