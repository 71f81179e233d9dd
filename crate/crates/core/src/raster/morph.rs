//! Binary morphology with an elliptical structuring element.
//!
//! Out-of-bounds samples replicate the nearest edge pixel, so a solid mask
//! stays solid and border pixels never erode against phantom background.

use super::image::BinaryMask;
use crate::error::{Error, Result};

/// Half-widths of a disc of radius `radius`, one per row offset `-radius..=radius`.
///
/// A pixel `(dx, dy)` belongs to the element when
/// `dx² + dy² ≤ (radius + 0.5)²`.
pub fn ellipse_half_widths(radius: usize) -> Vec<usize> {
    let r = radius as f64 + 0.5;
    (-(radius as isize)..=radius as isize)
        .map(|dy| {
            let rem = r * r - (dy * dy) as f64;
            (rem.max(0.0).sqrt().floor() as usize).min(radius)
        })
        .collect()
}

fn row_prefix(mask: &BinaryMask) -> Vec<u32> {
    let w = mask.width();
    let mut prefix = vec![0u32; (w + 1) * mask.height()];
    for y in 0..mask.height() {
        let row = &mask.bits()[y * w..(y + 1) * w];
        let out = &mut prefix[y * (w + 1)..(y + 1) * (w + 1)];
        for (x, &b) in row.iter().enumerate() {
            out[x + 1] = out[x] + b as u32;
        }
    }
    prefix
}

fn apply(mask: &BinaryMask, radius: usize, erode: bool) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let widths = ellipse_half_widths(radius);
    let prefix = row_prefix(mask);
    let r = radius as isize;
    let mut bits = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut hit_all = true;
            let mut hit_any = false;
            for (i, &hw) in widths.iter().enumerate() {
                let yy = (y as isize + i as isize - r).clamp(0, h as isize - 1) as usize;
                let lo = x.saturating_sub(hw);
                let hi = (x + hw).min(w - 1);
                let row = &prefix[yy * (w + 1)..(yy + 1) * (w + 1)];
                let set = row[hi + 1] - row[lo];
                if set as usize != hi + 1 - lo {
                    hit_all = false;
                }
                if set > 0 {
                    hit_any = true;
                }
                if erode && !hit_all || !erode && hit_any {
                    break;
                }
            }
            bits[y * w + x] = if erode { hit_all } else { hit_any };
        }
    }
    BinaryMask::from_bits(w, h, bits).expect("shape preserved")
}

pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    apply(mask, radius, true)
}

pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    apply(mask, radius, false)
}

pub fn open(mask: &BinaryMask, radius: usize) -> BinaryMask {
    dilate(&erode(mask, radius), radius)
}

pub fn close(mask: &BinaryMask, radius: usize) -> BinaryMask {
    erode(&dilate(mask, radius), radius)
}

/// Opening followed by closing: removes speckle, then fills pinholes.
pub fn morph_open_close(mask: &BinaryMask, kernel_radius: usize) -> Result<BinaryMask> {
    if kernel_radius == 0 {
        return Err(Error::InvalidParameter("kernel radius must be >= 1".into()));
    }
    Ok(close(&open(mask, kernel_radius), kernel_radius))
}
