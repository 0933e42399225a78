//! Hidden-state dump directories: one HSD1 file per layer plus a
//! `manifest.json` listing them. Without a manifest every `*.hsd` file in the
//! directory is read in name order.

use std::fs;
use std::path::Path;

use posgrid_core::hsd::HiddenDump;
use serde::{Deserialize, Serialize};

use crate::error::{json_error, PosgridError, Result};
use crate::fsutil;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpEntry {
    pub layer: u16,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpManifest {
    pub layers: Vec<DumpEntry>,
}

pub fn read_dump(path: &Path) -> Result<HiddenDump> {
    let bytes = fsutil::read(path)?;
    HiddenDump::decode(&bytes).map_err(|e| PosgridError::format(path, e.to_string()))
}

pub fn read_dumps(dir: &Path) -> Result<Vec<HiddenDump>> {
    let manifest_path = dir.join("manifest.json");
    if manifest_path.is_file() {
        let text = fsutil::read_to_string(&manifest_path)?;
        let m: DumpManifest =
            serde_json::from_str(&text).map_err(|e| json_error(&manifest_path, &text, e))?;
        return m
            .layers
            .iter()
            .map(|entry| {
                let path = dir.join(&entry.file);
                let dump = read_dump(&path)?;
                if dump.layer_index != entry.layer {
                    return Err(PosgridError::format(
                        &path,
                        format!(
                            "manifest says layer {}, file says {}",
                            entry.layer, dump.layer_index
                        ),
                    ));
                }
                Ok(dump)
            })
            .collect();
    }
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| PosgridError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "hsd"))
        .collect();
    files.sort();
    files.iter().map(|p| read_dump(p)).collect()
}

pub fn write_dumps(dir: &Path, dumps: &[HiddenDump]) -> Result<()> {
    fsutil::create_dir_all(dir)?;
    let mut layers = Vec::new();
    for d in dumps {
        let file = format!("layer_{:03}.hsd", d.layer_index);
        let bytes = d.encode()?;
        fsutil::write_atomic(&dir.join(&file), &bytes)?;
        layers.push(DumpEntry {
            layer: d.layer_index,
            file,
        });
    }
    fsutil::write_json(&dir.join("manifest.json"), &DumpManifest { layers })
}
