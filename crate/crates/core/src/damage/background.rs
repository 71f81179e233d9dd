use super::BackgroundConfig;
use crate::error::{Error, Result};
use crate::raster::{morph_open_close, saturation, BinaryMask, RasterImage};

/// Foreground extraction by saturation threshold.
///
/// Pixels with saturation strictly above τ are note material; the mask is
/// cleaned with an opening and a closing, and everything outside it is
/// painted white.
pub fn remove_background(
    img: &RasterImage,
    config: &BackgroundConfig,
) -> Result<(RasterImage, BinaryMask)> {
    let sat = saturation(img)?;
    let raw = BinaryMask::from_bits(
        img.width(),
        img.height(),
        sat.iter()
            .map(|&s| s > config.saturation_threshold)
            .collect(),
    )?;
    let mask = if config.morph_radius > 0 {
        morph_open_close(&raw, config.morph_radius)?
    } else {
        raw
    };
    if mask.is_empty() {
        return Err(Error::NoNoteDetected);
    }
    let mut out = img.clone();
    for (px, &keep) in out.data_mut().chunks_exact_mut(3).zip(mask.bits()) {
        if !keep {
            px.copy_from_slice(&[255, 255, 255]);
        }
    }
    Ok((out, mask))
}
