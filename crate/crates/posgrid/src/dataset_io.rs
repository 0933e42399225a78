//! On-disk dataset layout: `manifest.json`, `samples.jsonl` (one sample per
//! line, keys in declaration order) and `images/<id>.png`.

use std::fs;
use std::path::{Path, PathBuf};

use posgrid_core::dataset::{Dataset, Manifest, VqaSample};
use posgrid_core::raster::render_scene;
use rayon::prelude::*;

use crate::error::{json_error, PosgridError, Result};
use crate::fsutil;
use crate::png_io::encode_image;

pub const MANIFEST: &str = "manifest.json";
pub const SAMPLES: &str = "samples.jsonl";

/// Where the images of a written dataset come from.
#[derive(Clone, Debug)]
pub enum Images {
    /// Render every synthetic sample's scene.
    Render,
    /// Copy `image_path` files that exist under another dataset directory.
    CopyFrom(PathBuf),
    None,
}

pub fn samples_jsonl(d: &Dataset) -> Result<String> {
    let mut out = String::new();
    for s in &d.samples {
        let line = serde_json::to_string(s)
            .map_err(|e| PosgridError::Input(format!("serializing {}: {e}", s.id)))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

fn render_all(dir: &Path, samples: &[VqaSample]) -> Result<()> {
    samples.par_iter().try_for_each(|s| {
        let Some(spec) = s.scene() else {
            return Ok(());
        };
        let img = render_scene(&spec)?;
        encode_image(&img, &dir.join(&s.image_path))
    })
}

fn copy_all(dir: &Path, src: &Path, samples: &[VqaSample]) -> Result<()> {
    samples.par_iter().try_for_each(|s| {
        let from = src.join(&s.image_path);
        if !from.is_file() {
            return Ok(());
        }
        let to = dir.join(&s.image_path);
        if let Some(parent) = to.parent() {
            fsutil::create_dir_all(parent)?;
        }
        fsutil::write_atomic(&to, &fsutil::read(&from)?)
    })
}

/// Writes a dataset directory. Rendering and copying run on the current
/// rayon pool; file contents do not depend on the degree of parallelism.
pub fn write_dataset(dir: &Path, d: &Dataset, images: &Images) -> Result<()> {
    if !d.ids_unique() {
        return Err(PosgridError::Input(format!(
            "dataset {} has duplicate ids",
            d.name
        )));
    }
    fsutil::create_dir_all(dir)?;
    match images {
        Images::Render => {
            fsutil::create_dir_all(&dir.join("images"))?;
            render_all(dir, &d.samples)?;
        }
        Images::CopyFrom(src) => copy_all(dir, src, &d.samples)?,
        Images::None => {}
    }
    fsutil::write_atomic(&dir.join(SAMPLES), samples_jsonl(d)?.as_bytes())?;
    fsutil::write_json(&dir.join(MANIFEST), &d.manifest())
}

/// Reads a dataset directory and checks the manifest against the samples.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join(MANIFEST);
    let text = fsutil::read_to_string(&manifest_path)?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| json_error(&manifest_path, &text, e))?;

    let samples_path = dir.join(SAMPLES);
    let text = fsutil::read_to_string(&samples_path)?;
    let mut samples = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let s: VqaSample = serde_json::from_str(trimmed).map_err(|e| PosgridError::Json {
                path: samples_path.clone(),
                offset: offset + e.column().saturating_sub(1),
                message: e.to_string(),
            })?;
            samples.push(s);
        }
        offset += line.len();
    }
    let mut d = Dataset::new(manifest.name.clone(), manifest.seed, samples);
    d.deficits = manifest.region_deficits.clone();
    let recomputed = d.manifest();
    if recomputed.total != manifest.total
        || recomputed.counts_per_cell != manifest.counts_per_cell
        || recomputed.counts_per_label != manifest.counts_per_label
        || recomputed.content_hash != manifest.content_hash
    {
        return Err(PosgridError::format(
            &manifest_path,
            "manifest does not match samples.jsonl",
        ));
    }
    if let Some(bad) = d.samples.iter().find(|s| !s.is_consistent()) {
        return Err(PosgridError::format(
            &samples_path,
            format!("sample {} violates the option/gold invariants", bad.id),
        ));
    }
    Ok(d)
}

/// All files under `dir`, relative and sorted; used to compare output trees.
pub fn list_tree(dir: &Path) -> Result<Vec<PathBuf>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(|e| PosgridError::io(dir, e))? {
            let entry = entry.map_err(|e| PosgridError::io(dir, e))?;
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use posgrid_core::synth::build_eval_set;

    fn tiny() -> Dataset {
        Dataset::new("tiny", 3, build_eval_set(3).samples[..12].to_vec())
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = tiny();
        write_dataset(dir.path(), &d, &Images::Render).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back, d);
        for s in &d.samples {
            assert!(dir.path().join(&s.image_path).is_file());
        }
    }

    #[test]
    fn tampered_manifest_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &tiny(), &Images::None).unwrap();
        let p = dir.path().join(SAMPLES);
        let text = fs::read_to_string(&p).unwrap();
        let first_line_end = text.find('\n').unwrap() + 1;
        fs::write(&p, &text[first_line_end..]).unwrap();
        let err = read_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("manifest does not match"), "{err}");
    }

    #[test]
    fn malformed_line_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &tiny(), &Images::None).unwrap();
        let p = dir.path().join(SAMPLES);
        let text = fs::read_to_string(&p).unwrap();
        let first_line_end = text.find('\n').unwrap() + 1;
        fs::write(&p, format!("{}{{oops\n", &text[..first_line_end])).unwrap();
        match read_dataset(dir.path()).unwrap_err() {
            PosgridError::Json { offset, .. } => assert!(offset >= first_line_end),
            e => panic!("{e}"),
        }
    }
}
