use std::fs;
use std::path::Path;

use ordlab_core::nn::Checkpoint;
use ordlab_core::Real;

use crate::error::{Error, Result};

/// Writes to a sibling temporary file first so a crash never leaves a
/// half-written checkpoint under the final name.
pub fn save_checkpoint<S: Real>(path: &Path, ck: &Checkpoint<S>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, ck.encode()).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<S: Real>(path: &Path) -> Result<Checkpoint<S>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Checkpoint::decode(&bytes)?)
}
