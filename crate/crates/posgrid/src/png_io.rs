//! Lossless PNG encoding of rendered stimuli with fixed encoder settings.

use std::io::Cursor;
use std::path::Path;

use posgrid_core::raster::Image;

use crate::error::{PosgridError, Result};
use crate::fsutil;

/// 8-bit RGB PNG bytes. Compression and filter are pinned so identical
/// images always produce identical files.
pub fn encode_png(img: &Image) -> Result<Vec<u8>, png::EncodingError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width, img.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Fast);
        enc.set_filter(png::Filter::Up);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&img.pixels)?;
        writer.finish()?;
    }
    Ok(out)
}

pub fn encode_image(img: &Image, path: &Path) -> Result<()> {
    let bytes = encode_png(img).map_err(|e| PosgridError::format(path, e.to_string()))?;
    fsutil::write_atomic(path, &bytes)
}

pub fn decode_png(bytes: &[u8]) -> Result<Image, String> {
    let dec = png::Decoder::new(Cursor::new(bytes));
    let mut reader = dec.read_info().map_err(|e| e.to_string())?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| "image too large".to_string())?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(format!(
            "expected 8-bit RGB, got {:?}/{:?}",
            info.color_type, info.bit_depth
        ));
    }
    buf.truncate(info.buffer_size());
    Ok(Image {
        width: info.width,
        height: info.height,
        pixels: buf,
    })
}

pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = fsutil::read(path)?;
    decode_png(&bytes).map_err(|e| PosgridError::format(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use posgrid_core::raster::{render_scene, SceneObject, StimulusSpec};
    use posgrid_core::{Cell, Color, Shape, Size};

    fn scene() -> Image {
        render_scene(&StimulusSpec::single(SceneObject {
            shape: Shape::Star,
            color: Color::Magenta,
            size: Size::Regular,
            cell: Cell { row: 3, col: 6 },
        }))
        .unwrap()
    }

    #[test]
    fn round_trip_and_stable_bytes() {
        let img = scene();
        let a = encode_png(&img).unwrap();
        assert_eq!(decode_png(&a).unwrap(), img);
        assert_eq!(encode_png(&scene()).unwrap(), a);
    }

    #[test]
    fn bad_path_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("missing").join("x.png");
        let err = encode_image(&scene(), &p).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!p.exists());
    }
}
