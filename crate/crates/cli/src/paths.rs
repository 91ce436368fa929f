use std::path::{Path, PathBuf};

use pkde_core::manifest::{manifest_path, manifest_root, Manifest};

use crate::error::CliError;

/// `<kind>/part_NN/layer_NNNN.<ext>`, the layout shared by every per-layer
/// artifact.
pub fn layer_file(kind: &str, part: u32, layer: u32, ext: &str) -> String {
    format!("{kind}/{}", layer_stem(part, layer, ext))
}

/// `part_NN/layer_NNNN.<ext>`.
pub fn layer_stem(part: u32, layer: u32, ext: &str) -> String {
    format!("part_{part:02}/layer_{layer:04}.{ext}")
}

/// Loads a manifest from a dataset directory or manifest path, returning it
/// with the directory its paths resolve against.
pub(crate) fn open_manifest(arg: Option<&Path>, command: &str) -> Result<(Manifest, PathBuf), CliError> {
    let arg = arg.ok_or_else(|| CliError::Usage(format!("{command} needs --dataset")))?;
    let path = manifest_path(arg);
    if !path.is_file() {
        return Err(CliError::Data(format!("no manifest at {}", path.display())));
    }
    let m = Manifest::load(&path)?;
    Ok((m, manifest_root(&path)))
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| crate::error::io_error(dir, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(d) = path.parent() {
        create_dir(d)?;
    }
    std::fs::write(path, text).map_err(|e| crate::error::io_error(path, e))
}

pub(crate) fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{what} {} not found", path.display())))
    }
}
