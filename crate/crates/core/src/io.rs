//! PNG/JPEG raster I/O and 1-bit mask PNGs.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RasterImage};

/// Decodes any supported file into a 3-channel RGB raster.
pub fn load_rgb(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| match source {
        image::ImageError::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        source => Error::Decode {
            path: path.to_path_buf(),
            source,
        },
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    RasterImage::new(w as usize, h as usize, 3, rgb.into_raw())
}

/// Decodes an in-memory encoded image into RGB.
pub fn decode_rgb(bytes: &[u8]) -> Result<RasterImage> {
    let img = image::load_from_memory(bytes).map_err(|source| Error::Decode {
        path: "<memory>".into(),
        source,
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    RasterImage::new(w as usize, h as usize, 3, rgb.into_raw())
}

/// Writes a raster; the format follows the file extension (PNG or JPEG).
pub fn save(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let color = match img.channels() {
        1 => image::ExtendedColorType::L8,
        _ => image::ExtendedColorType::Rgb8,
    };
    image::save_buffer(
        path,
        img.data(),
        img.width() as u32,
        img.height() as u32,
        color,
    )
    .map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a mask as a 1-bit grayscale PNG (set = white).
pub fn save_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        mask.width() as u32,
        mask.height() as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::One);
    let mut writer = encoder.write_header()?;
    let stride = mask.width().div_ceil(8);
    let mut packed = vec![0u8; stride * mask.height()];
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                packed[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    writer.write_image_data(&packed)?;
    writer.finish()?;
    Ok(())
}

/// Reads a mask PNG; any nonzero luma is set.
pub fn load_mask_png(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })?
        .to_luma8();
    let (w, h) = img.dimensions();
    BinaryMask::from_bits(
        w as usize,
        h as usize,
        img.into_raw().into_iter().map(|v| v > 0).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let mask = BinaryMask::from_fn(13, 7, |x, y| (x * 3 + y) % 5 == 0);
        save_mask_png(&mask, &path).unwrap();
        assert_eq!(load_mask_png(&path).unwrap(), mask);
    }

    #[test]
    fn rgb_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let img = RasterImage::from_rgb_fn(9, 4, |x, y| [x as u8 * 20, y as u8 * 50, 3]).unwrap();
        save(&img, &path).unwrap();
        assert_eq!(load_rgb(&path).unwrap(), img);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_rgb("/nonexistent/x.png"),
            Err(Error::Io { .. })
        ));
    }
}
