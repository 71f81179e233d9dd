//! Image enhancement chain: median denoise, fixed-kernel sharpen, percentile
//! contrast stretch and CLAHE, plus the bilateral filter used before
//! chromatic comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{self, clamp_u8, percentile_from_histogram, RasterImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhanceConfig {
    pub median_enabled: bool,
    pub median_kernel: usize,
    pub sharpen_enabled: bool,
    pub stretch_enabled: bool,
    pub stretch_low_pct: f64,
    pub stretch_high_pct: f64,
    pub clahe_enabled: bool,
    pub clahe_clip: f64,
    /// Tile grid as (columns, rows).
    pub clahe_tiles: (usize, usize),
    pub bilateral_enabled: bool,
    pub bilateral_diameter: usize,
    pub bilateral_sigma_color: f64,
    pub bilateral_sigma_space: f64,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            median_enabled: true,
            median_kernel: 3,
            sharpen_enabled: true,
            stretch_enabled: true,
            stretch_low_pct: 2.0,
            stretch_high_pct: 98.0,
            clahe_enabled: true,
            clahe_clip: 2.0,
            clahe_tiles: (8, 8),
            bilateral_enabled: true,
            bilateral_diameter: 9,
            bilateral_sigma_color: 75.0,
            bilateral_sigma_space: 75.0,
        }
    }
}

impl EnhanceConfig {
    /// Every stage switched off.
    pub fn disabled() -> Self {
        Self {
            median_enabled: false,
            sharpen_enabled: false,
            stretch_enabled: false,
            clahe_enabled: false,
            bilateral_enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("enhance: {m}")));
        if self.median_kernel < 3 || self.median_kernel % 2 == 0 {
            return bad("median_kernel must be odd and >= 3");
        }
        if !(0.0 <= self.stretch_low_pct
            && self.stretch_low_pct < self.stretch_high_pct
            && self.stretch_high_pct <= 100.0)
        {
            return bad("need 0 <= stretch_low_pct < stretch_high_pct <= 100");
        }
        if !(self.clahe_clip > 0.0) {
            return bad("clahe_clip must be > 0");
        }
        if self.clahe_tiles.0 == 0 || self.clahe_tiles.1 == 0 {
            return bad("clahe_tiles must be at least 1x1");
        }
        if self.bilateral_diameter == 0 {
            return bad("bilateral_diameter must be >= 1");
        }
        if !(self.bilateral_sigma_color > 0.0 && self.bilateral_sigma_space > 0.0) {
            return bad("bilateral sigmas must be > 0");
        }
        Ok(())
    }
}

/// Per-channel median over a `k`×`k` replicate-padded window.
pub fn median_blur(img: &RasterImage, k: usize) -> Result<RasterImage> {
    if k < 3 || k % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "median kernel must be odd and >= 3, got {k}"
        )));
    }
    let r = (k / 2) as isize;
    let ch = img.channels();
    let mut out = img.clone();
    let mut window = Vec::with_capacity(k * k);
    for y in 0..img.height() {
        for x in 0..img.width() {
            for c in 0..ch {
                window.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        window.push(img.sample_clamped(x as isize + dx, y as isize + dy, c));
                    }
                }
                let mid = window.len() / 2;
                let (_, m, _) = window.select_nth_unstable(mid);
                out.pixel_mut(x, y)[c] = *m;
            }
        }
    }
    Ok(out)
}

/// The fixed 3×3 sharpening kernel; its weights sum to 1.
pub const SHARPEN_KERNEL: [[i32; 3]; 3] = [[-1, -1, -1], [-1, 9, -1], [-1, -1, -1]];

pub fn sharpen(img: &RasterImage) -> RasterImage {
    let ch = img.channels();
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            for c in 0..ch {
                let mut acc = 0i32;
                for (j, row) in SHARPEN_KERNEL.iter().enumerate() {
                    for (i, &kv) in row.iter().enumerate() {
                        let v = img.sample_clamped(
                            x as isize - (i as isize - 1),
                            y as isize - (j as isize - 1),
                            c,
                        );
                        acc += kv * v as i32;
                    }
                }
                out.pixel_mut(x, y)[c] = acc.clamp(0, 255) as u8;
            }
        }
    }
    out
}

/// Linear stretch of each channel so its low/high percentiles span 0–255.
///
/// A channel whose two percentiles coincide is returned unchanged.
pub fn contrast_stretch(img: &RasterImage, low_pct: f64, high_pct: f64) -> RasterImage {
    let ch = img.channels();
    let mut out = img.clone();
    for c in 0..ch {
        let mut hist = [0u64; 256];
        for p in img.data().chunks_exact(ch) {
            hist[p[c] as usize] += 1;
        }
        let lo = percentile_from_histogram(&hist, low_pct).unwrap_or(0) as f64;
        let hi = percentile_from_histogram(&hist, high_pct).unwrap_or(255) as f64;
        if hi <= lo {
            continue;
        }
        let lut: Vec<u8> = (0..256)
            .map(|v| clamp_u8(255.0 * (v as f64 - lo) / (hi - lo)))
            .collect();
        for p in out.data_mut().chunks_exact_mut(ch) {
            p[c] = lut[p[c] as usize];
        }
    }
    out
}

/// Contrast-limited histogram: `h'(i) = min(h(i), cl) + Σ max(h(j) − cl, 0) / L`.
///
/// The excess is redistributed once, uniformly, with no re-clipping.
pub fn clip_histogram(hist: &[f64], clip_limit: f64) -> Vec<f64> {
    let excess: f64 = hist.iter().map(|&h| (h - clip_limit).max(0.0)).sum();
    let share = excess / hist.len() as f64;
    hist.iter().map(|&h| h.min(clip_limit) + share).collect()
}

/// Equalisation mapping `CDF(i) · (I_max − I_min) + I_min` with `I_min = 0`, `I_max = 255`.
pub fn histogram_mapping(hist: &[f64]) -> Vec<f64> {
    let total: f64 = hist.iter().sum();
    let mut acc = 0.0;
    hist.iter()
        .map(|&h| {
            acc += h;
            if total > 0.0 {
                acc / total * 255.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Pixel span `[start, end)` of tile `i` out of `n` along an axis of `len` pixels.
pub fn tile_span(len: usize, n: usize, i: usize) -> (usize, usize) {
    (i * len / n, (i + 1) * len / n)
}

/// Absolute clip limit for a tile of `pixels` samples: `max(clip · pixels / 256, 1)`.
pub fn tile_clip_limit(clip: f64, pixels: usize) -> f64 {
    (clip * pixels as f64 / 256.0).max(1.0)
}

/// CLAHE of one 8-bit plane with bilinear blending between tile mappings.
pub fn clahe_plane(plane: &RasterImage, clip: f64, tiles: (usize, usize)) -> Result<RasterImage> {
    plane.require_channels(1)?;
    let (w, h) = (plane.width(), plane.height());
    let (tx, ty) = tiles;
    if tx == 0 || ty == 0 {
        return Err(Error::InvalidParameter(
            "tile grid must be at least 1x1".into(),
        ));
    }
    if w < tx || h < ty {
        return Err(Error::ImageTooSmall);
    }
    let mut maps = vec![Vec::new(); tx * ty];
    for j in 0..ty {
        let (y0, y1) = tile_span(h, ty, j);
        for i in 0..tx {
            let (x0, x1) = tile_span(w, tx, i);
            let mut hist = vec![0.0f64; 256];
            for y in y0..y1 {
                for x in x0..x1 {
                    hist[plane.sample(x, y, 0) as usize] += 1.0;
                }
            }
            let cl = tile_clip_limit(clip, (x1 - x0) * (y1 - y0));
            maps[j * tx + i] = histogram_mapping(&clip_histogram(&hist, cl));
        }
    }
    let centers = |len: usize, n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let (a, b) = tile_span(len, n, i);
                (a + b) as f64 / 2.0 - 0.5
            })
            .collect()
    };
    // For each coordinate: (lower tile, upper tile, weight of upper).
    let blend = |pos: usize, cs: &[f64]| -> (usize, usize, f64) {
        let p = pos as f64;
        if p <= cs[0] {
            return (0, 0, 0.0);
        }
        let last = cs.len() - 1;
        if p >= cs[last] {
            return (last, last, 0.0);
        }
        let i = cs.partition_point(|&c| c <= p) - 1;
        (i, i + 1, (p - cs[i]) / (cs[i + 1] - cs[i]))
    };
    let cx = centers(w, tx);
    let cy = centers(h, ty);
    let col: Vec<_> = (0..w).map(|x| blend(x, &cx)).collect();
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let (j0, j1, fy) = blend(y, &cy);
        for (x, &(i0, i1, fx)) in col.iter().enumerate() {
            let v = plane.sample(x, y, 0) as usize;
            let top = maps[j0 * tx + i0][v] * (1.0 - fx) + maps[j0 * tx + i1][v] * fx;
            let bottom = maps[j1 * tx + i0][v] * (1.0 - fx) + maps[j1 * tx + i1][v] * fx;
            data.push(clamp_u8(top * (1.0 - fy) + bottom * fy));
        }
    }
    RasterImage::new(w, h, 1, data)
}

/// CLAHE on the lightness channel (LAB for colour input, the plane itself for gray).
pub fn clahe(img: &RasterImage, config: &EnhanceConfig) -> Result<RasterImage> {
    match img.channels() {
        1 => clahe_plane(img, config.clahe_clip, config.clahe_tiles),
        _ => {
            let lab = raster::rgb_to_lab(img)?;
            let l = clahe_plane(&lab.channel(0), config.clahe_clip, config.clahe_tiles)?;
            let merged = RasterImage::from_planes(&[l, lab.channel(1), lab.channel(2)])?;
            raster::lab_to_rgb(&merged)
        }
    }
}

/// Edge-preserving smoothing with Gaussian spatial and range weights over a
/// circular window of `bilateral_diameter` pixels. Colour input uses the
/// Euclidean RGB distance for the range term.
pub fn bilateral_filter(img: &RasterImage, config: &EnhanceConfig) -> RasterImage {
    let radius = (config.bilateral_diameter / 2) as isize;
    let ch = img.channels();
    let (w, h) = (img.width() as isize, img.height() as isize);

    let space_coeff = -0.5 / (config.bilateral_sigma_space * config.bilateral_sigma_space);
    let color_coeff = -0.5 / (config.bilateral_sigma_color * config.bilateral_sigma_color);
    let mut offsets = Vec::new();
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let d2 = (dx * dx + dy * dy) as f64;
            if d2 <= (radius * radius) as f64 {
                offsets.push((dx, dy, (d2 * space_coeff).exp()));
            }
        }
    }
    // exp(c·Σd²) = Π exp(c·d²), so one 256-entry table per channel difference.
    let range_lut: Vec<f64> = (0..256)
        .map(|d| ((d * d) as f64 * color_coeff).exp())
        .collect();

    // Replicate-padded copy so the inner loop indexes without clamping.
    let pw = (w + 2 * radius) as usize;
    let ph = (h + 2 * radius) as usize;
    let mut padded = vec![0u8; pw * ph * ch];
    for py in 0..ph {
        let sy = (py as isize - radius).clamp(0, h - 1) as usize;
        for px in 0..pw {
            let sx = (px as isize - radius).clamp(0, w - 1) as usize;
            padded[(py * pw + px) * ch..(py * pw + px + 1) * ch].copy_from_slice(img.pixel(sx, sy));
        }
    }
    // Windows with a single colour come out unchanged; find them with an
    // integral image of "differs from the right or lower neighbour".
    let iw = pw + 1;
    let mut changes = vec![0u32; iw * (ph + 1)];
    for py in 0..ph {
        let mut row = 0u32;
        for px in 0..pw {
            let i = (py * pw + px) * ch;
            let here = &padded[i..i + ch];
            let right = px + 1 < pw && padded[i + ch..i + 2 * ch] != *here;
            let down = py + 1 < ph && padded[i + pw * ch..i + pw * ch + ch] != *here;
            row += (right || down) as u32;
            changes[(py + 1) * iw + px + 1] = changes[py * iw + px + 1] + row;
        }
    }
    let d = 2 * radius as usize;
    let uniform = |x: usize, y: usize| {
        // square window minus its last row and column, in padded coordinates
        let (x1, y1) = (x + d, y + d);
        changes[y1 * iw + x1] + changes[y * iw + x] == changes[y * iw + x1] + changes[y1 * iw + x]
    };
    let stride = pw * ch;
    let mut out = img.clone();
    let mut acc = vec![0.0f32; w as usize * ch];
    let mut norm = vec![0.0f32; w as usize];
    let range_lut: Vec<f32> = range_lut.iter().map(|&v| v as f32).collect();
    let lut = |a: u8, b: u8| range_lut[(a as i32 - b as i32).unsigned_abs() as usize];
    let r = radius as usize;
    for y in 0..h as usize {
        let todo: Vec<bool> = (0..w as usize).map(|x| !uniform(x, y)).collect();
        if !todo.iter().any(|&t| t) {
            continue;
        }
        acc.fill(0.0);
        norm.fill(0.0);
        let centre = &padded[(y + r) * stride + r * ch..(y + r) * stride + (r + w as usize) * ch];
        for &(dx, dy, ws) in &offsets {
            let start =
                ((y as isize + radius + dy) as usize) * stride + ((radius + dx) as usize) * ch;
            let row = &padded[start..start + w as usize * ch];
            let ws = ws as f32;
            if ch == 3 {
                for (((c, q), a), n) in centre
                    .chunks_exact(3)
                    .zip(row.chunks_exact(3))
                    .zip(acc.chunks_exact_mut(3))
                    .zip(norm.iter_mut())
                {
                    let wgt = ws * lut(c[0], q[0]) * lut(c[1], q[1]) * lut(c[2], q[2]);
                    a[0] += wgt * q[0] as f32;
                    a[1] += wgt * q[1] as f32;
                    a[2] += wgt * q[2] as f32;
                    *n += wgt;
                }
            } else {
                for (((c, q), a), n) in centre
                    .chunks_exact(ch)
                    .zip(row.chunks_exact(ch))
                    .zip(acc.chunks_exact_mut(ch))
                    .zip(norm.iter_mut())
                {
                    let mut wgt = ws;
                    for k in 0..ch {
                        wgt *= lut(c[k], q[k]);
                    }
                    for k in 0..ch {
                        a[k] += wgt * q[k] as f32;
                    }
                    *n += wgt;
                }
            }
        }
        for x in (0..w as usize).filter(|&x| todo[x]) {
            let dst = out.pixel_mut(x, y);
            for c in 0..ch {
                dst[c] = clamp_u8((acc[x * ch + c] / norm[x]) as f64);
            }
        }
    }
    out
}

/// Median → sharpen → contrast stretch → CLAHE, each stage gated by its flag.
pub fn enhance_pipeline(img: &RasterImage, config: &EnhanceConfig) -> Result<RasterImage> {
    config.validate()?;
    let mut cur = img.clone();
    if config.median_enabled {
        cur = median_blur(&cur, config.median_kernel)?;
    }
    if config.sharpen_enabled {
        cur = sharpen(&cur);
    }
    if config.stretch_enabled {
        cur = contrast_stretch(&cur, config.stretch_low_pct, config.stretch_high_pct);
    }
    if config.clahe_enabled {
        cur = clahe(&cur, config)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_window_example() {
        let vals = [1u8, 2, 3, 4, 100, 6, 7, 8, 9];
        let img = RasterImage::from_gray_fn(3, 3, |x, y| vals[y * 3 + x]).unwrap();
        assert_eq!(median_blur(&img, 3).unwrap().sample(1, 1, 0), 6);
        assert!(median_blur(&img, 4).is_err());
        assert!(median_blur(&img, 1).is_err());
    }

    #[test]
    fn constant_images_survive_local_filters() {
        let img = RasterImage::filled(7, 5, &[100, 30, 200]).unwrap();
        assert_eq!(median_blur(&img, 5).unwrap(), img);
        assert_eq!(sharpen(&img), img);
        assert_eq!(bilateral_filter(&img, &EnhanceConfig::default()), img);
        let gray = RasterImage::filled(6, 6, &[77]).unwrap();
        assert_eq!(contrast_stretch(&gray, 2.0, 98.0), gray);
    }

    #[test]
    fn sharpen_isolated_spike() {
        let img =
            RasterImage::from_gray_fn(5, 5, |x, y| if (x, y) == (2, 2) { 255 } else { 0 }).unwrap();
        let out = sharpen(&img);
        assert_eq!(out.sample(2, 2, 0), 255);
        for (x, y) in [(1, 1), (2, 1), (3, 3), (1, 2)] {
            assert_eq!(out.sample(x, y, 0), 0);
        }
    }

    #[test]
    fn stretch_hand_example() {
        // 2 at 50, 95 at 100, 3 at 150 -> p2 = 50, p98 = 150; 100 maps to 127.5
        let mut vals = vec![50u8; 2];
        vals.extend(std::iter::repeat(100).take(95));
        vals.extend([150, 150, 150]);
        let img = RasterImage::new(10, 10, 1, vals).unwrap();
        let out = contrast_stretch(&img, 2.0, 98.0);
        assert_eq!(out.sample(0, 0, 0), 0);
        assert_eq!(out.sample(5, 5, 0), 128);
        assert_eq!(out.sample(9, 9, 0), 255);
    }

    #[test]
    fn stretch_full_range_is_identity() {
        let img = RasterImage::from_gray_fn(256, 1, |x, _| x as u8).unwrap();
        let out = contrast_stretch(&img, 0.0, 100.0);
        assert_eq!(out, img);
    }

    #[test]
    fn clipped_histogram_example() {
        let mut h = vec![0.0; 256];
        h[17] = 1000.0;
        let c = clip_histogram(&h, 100.0);
        assert!((c[17] - (100.0 + 900.0 / 256.0)).abs() < 1e-12);
        assert!((c[0] - 900.0 / 256.0).abs() < 1e-12);
        assert!((c.iter().sum::<f64>() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn clahe_rejects_tiny_image() {
        let img = RasterImage::filled(5, 20, &[10]).unwrap();
        assert!(matches!(
            clahe_plane(&img, 2.0, (8, 8)),
            Err(Error::ImageTooSmall)
        ));
    }

    #[test]
    fn config_validation() {
        assert!(EnhanceConfig::default().validate().is_ok());
        let bad = EnhanceConfig {
            median_kernel: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = EnhanceConfig {
            stretch_low_pct: 98.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn pipeline_disabled_is_identity() {
        let img =
            RasterImage::from_rgb_fn(16, 16, |x, y| [(x * 13) as u8, (y * 7) as u8, 99]).unwrap();
        assert_eq!(
            enhance_pipeline(&img, &EnhanceConfig::disabled()).unwrap(),
            img
        );
    }
}
