use super::image::{clamp_u8, RasterImage};

/// Bilinear sample of channel `c` at continuous pixel-centre coordinates.
///
/// Returns `None` when `(x, y)` is outside `[0, w-1] × [0, h-1]`.
#[inline]
pub fn bilinear(img: &RasterImage, x: f64, y: f64, c: usize) -> Option<f64> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    const SLACK: f64 = 1e-6;
    if !(x >= -SLACK && y >= -SLACK && x <= w - 1.0 + SLACK && y <= h - 1.0 + SLACK) {
        return None;
    }
    Some(bilinear_clamped(img, x, y, c))
}

/// Bilinear sample with replicate-edge padding.
#[inline]
pub fn bilinear_clamped(img: &RasterImage, x: f64, y: f64, c: usize) -> f64 {
    let x = x.clamp(0.0, img.width() as f64 - 1.0);
    let y = y.clamp(0.0, img.height() as f64 - 1.0);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let p00 = img.sample(x0, y0, c) as f64;
    let p10 = img.sample(x1, y0, c) as f64;
    let p01 = img.sample(x0, y1, c) as f64;
    let p11 = img.sample(x1, y1, c) as f64;
    let top = p00 + (p10 - p00) * fx;
    let bottom = p01 + (p11 - p01) * fx;
    top + (bottom - top) * fy
}

/// Bilinear resize with half-pixel centre alignment.
pub fn resize_bilinear(img: &RasterImage, width: usize, height: usize) -> RasterImage {
    if img.width() == width && img.height() == height {
        return img.clone();
    }
    let sx = img.width() as f64 / width as f64;
    let sy = img.height() as f64 / height as f64;
    let ch = img.channels();
    let mut data = Vec::with_capacity(width * height * ch);
    for y in 0..height {
        let src_y = (y as f64 + 0.5) * sy - 0.5;
        for x in 0..width {
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            for c in 0..ch {
                data.push(clamp_u8(bilinear_clamped(img, src_x, src_y, c)));
            }
        }
    }
    RasterImage::new(width, height, ch, data).expect("target size is nonzero")
}

/// Box-filter resize: each output pixel averages the source area it covers.
pub fn resize_area(img: &RasterImage, width: usize, height: usize) -> Vec<f64> {
    let (sw, sh) = (img.width(), img.height());
    let ch = img.channels();
    let sx = sw as f64 / width as f64;
    let sy = sh as f64 / height as f64;
    let mut out = vec![0.0; width * height * ch];
    for oy in 0..height {
        let ya = oy as f64 * sy;
        let yb = ya + sy;
        for ox in 0..width {
            let xa = ox as f64 * sx;
            let xb = xa + sx;
            let mut acc = vec![0.0; ch];
            let mut total = 0.0;
            let mut y = ya.floor() as usize;
            while (y as f64) < yb && y < sh {
                let wy = (yb.min(y as f64 + 1.0) - ya.max(y as f64)).max(0.0);
                let mut x = xa.floor() as usize;
                while (x as f64) < xb && x < sw {
                    let wx = (xb.min(x as f64 + 1.0) - xa.max(x as f64)).max(0.0);
                    let wgt = wx * wy;
                    for (c, a) in acc.iter_mut().enumerate() {
                        *a += wgt * img.sample(x, y, c) as f64;
                    }
                    total += wgt;
                    x += 1;
                }
                y += 1;
            }
            for c in 0..ch {
                out[(oy * width + ox) * ch + c] = acc[c] / total;
            }
        }
    }
    out
}
