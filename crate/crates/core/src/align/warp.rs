use super::Homography;
use crate::raster::{bilinear, clamp_u8, BinaryMask, RasterImage};

/// Resamples `damaged` into a `width × height` reference frame.
///
/// Each output pixel looks up `H⁻¹(x, y)` in the source with bilinear
/// interpolation; pixels that fall outside the source are white.
pub fn warp_to_reference(
    damaged: &RasterImage,
    h: &Homography,
    width: usize,
    height: usize,
) -> RasterImage {
    let inv = h.inverse();
    let ch = damaged.channels();
    let mut out = vec![255u8; width * height * ch];
    for y in 0..height {
        for x in 0..width {
            let Some((sx, sy)) = inv.apply(x as f64, y as f64) else {
                continue;
            };
            let base = (y * width + x) * ch;
            for c in 0..ch {
                if let Some(v) = bilinear(damaged, sx, sy, c) {
                    out[base + c] = clamp_u8(v);
                }
            }
        }
    }
    RasterImage::new(width, height, ch, out).expect("dimensions computed from the request")
}

/// Warps a mask like [`warp_to_reference`], setting a bit where the
/// interpolated coverage reaches one half. Outside the source is unset.
pub fn warp_mask(mask: &BinaryMask, h: &Homography, width: usize, height: usize) -> BinaryMask {
    let inv = h.inverse();
    let src = mask.to_image();
    BinaryMask::from_fn(width, height, |x, y| {
        inv.apply(x as f64, y as f64)
            .and_then(|(sx, sy)| bilinear(&src, sx, sy, 0))
            .is_some_and(|v| v >= 127.5)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> RasterImage {
        RasterImage::from_rgb_fn(40, 30, |x, y| {
            [(x * 6) as u8, (y * 8) as u8, ((x + y) * 3) as u8]
        })
        .unwrap()
    }

    #[test]
    fn identity_is_lossless() {
        let img = fixture();
        assert_eq!(
            warp_to_reference(&img, &Homography::identity(), 40, 30),
            img
        );
    }

    #[test]
    fn translation_leaves_white_strip() {
        let img = fixture();
        let h = Homography::from_row_major([1.0, 0.0, 10.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let out = warp_to_reference(&img, &h, 40, 30);
        for y in 0..30 {
            for x in 0..10 {
                assert_eq!(out.pixel(x, y), &[255, 255, 255]);
            }
            for x in 10..40 {
                assert_eq!(out.pixel(x, y), img.pixel(x - 10, y));
            }
        }
    }

    #[test]
    fn mask_translation() {
        let m = BinaryMask::from_fn(20, 20, |x, y| (5..10).contains(&x) && (5..10).contains(&y));
        let h = Homography::from_row_major([1.0, 0.0, 3.0, 0.0, 1.0, -2.0, 0.0, 0.0, 1.0]).unwrap();
        let w = warp_mask(&m, &h, 20, 20);
        assert_eq!(w.count(), 25);
        assert!(w.get(8, 3) && w.get(12, 7) && !w.get(7, 3));
    }
}
