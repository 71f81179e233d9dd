//! Stochastic training-time augmentation.
//!
//! Stages run in a fixed order: resized crop, rotation, horizontal flip,
//! colour jitter, affine, random erasing. All randomness comes from the
//! caller's RNG, so a seeded `ChaCha8Rng` reproduces an output bit for bit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{bilinear, clamp_u8, hsv_to_rgb_f, resize_bilinear, RasterImage};

/// Channel means used to normalise model inputs (ImageNet statistics).
pub const IMAGENET_MEAN: [f64; 3] = [0.485, 0.456, 0.406];
/// Channel standard deviations paired with [`IMAGENET_MEAN`].
pub const IMAGENET_STD: [f64; 3] = [0.229, 0.224, 0.225];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Crop area as a fraction of the source area.
    pub crop_scale: (f64, f64),
    /// Crop aspect ratio relative to the source aspect ratio.
    pub crop_ratio: (f64, f64),
    pub rotation_deg: f64,
    pub hflip_prob: f64,
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    /// Hue shift as a fraction of the hue circle.
    pub hue: f64,
    /// Maximum translation as a fraction of the side length.
    pub translate: f64,
    pub affine_scale: (f64, f64),
    pub shear_deg: f64,
    pub erase_prob: f64,
    pub erase_area: (f64, f64),
    pub erase_ratio: (f64, f64),
    pub output_size: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            crop_scale: (0.8, 1.0),
            crop_ratio: (3.0 / 4.0, 4.0 / 3.0),
            rotation_deg: 15.0,
            hflip_prob: 0.5,
            brightness: 0.2,
            contrast: 0.2,
            saturation: 0.2,
            hue: 0.1,
            translate: 0.1,
            affine_scale: (0.9, 1.1),
            shear_deg: 10.0,
            erase_prob: 0.5,
            erase_area: (0.02, 0.15),
            erase_ratio: (0.3, 3.3),
            output_size: 224,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    /// Every stage collapsed to the identity; only the final resize remains.
    pub fn identity() -> Self {
        Self {
            crop_scale: (1.0, 1.0),
            crop_ratio: (1.0, 1.0),
            rotation_deg: 0.0,
            hflip_prob: 0.0,
            brightness: 0.0,
            contrast: 0.0,
            saturation: 0.0,
            hue: 0.0,
            translate: 0.0,
            affine_scale: (1.0, 1.0),
            shear_deg: 0.0,
            erase_prob: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("augment: {m}")));
        let range_ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi;
        if !range_ok(self.crop_scale) || self.crop_scale.1 > 1.0 {
            return bad("crop_scale must satisfy 0 < lo <= hi <= 1");
        }
        if !range_ok(self.crop_ratio) || !range_ok(self.affine_scale) || !range_ok(self.erase_ratio)
        {
            return bad("ratio and scale ranges must be positive and ordered");
        }
        if !range_ok(self.erase_area) || self.erase_area.1 >= 1.0 {
            return bad("erase_area must satisfy 0 < lo <= hi < 1");
        }
        for p in [self.hflip_prob, self.erase_prob] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must be in [0, 1]");
            }
        }
        for v in [
            self.rotation_deg,
            self.brightness,
            self.contrast,
            self.saturation,
            self.translate,
            self.shear_deg,
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad("magnitudes must be finite and >= 0");
            }
        }
        if !(0.0..=0.5).contains(&self.hue) {
            return bad("hue must be in [0, 0.5]");
        }
        if self.brightness >= 1.0 || self.contrast >= 1.0 || self.saturation >= 1.0 {
            return bad("jitter magnitudes must be < 1");
        }
        if self.output_size == 0 {
            return bad("output_size must be >= 1");
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Pixel rectangle `(x, y, w, h)`.
pub type Rect = (usize, usize, usize, usize);

/// Chooses the resized-crop window.
pub fn plan_crop<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Rect {
    let area = (width * height) as f64;
    let aspect = width as f64 / height as f64;
    for _ in 0..10 {
        let target = area * uniform(rng, cfg.crop_scale.0, cfg.crop_scale.1);
        let ratio = aspect * uniform(rng, cfg.crop_ratio.0.ln(), cfg.crop_ratio.1.ln()).exp();
        let cw = (target * ratio).sqrt().round() as usize;
        let ch = (target / ratio).sqrt().round() as usize;
        if (1..=width).contains(&cw) && (1..=height).contains(&ch) {
            let x = rng.gen_range(0..=width - cw);
            let y = rng.gen_range(0..=height - ch);
            return (x, y, cw, ch);
        }
    }
    (0, 0, width, height)
}

/// Chooses the erased rectangle, with its area fraction guaranteed inside
/// `erase_area`. Returns `None` when no rectangle fits after ten attempts.
pub fn plan_erase<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Option<Rect> {
    let area = (width * height) as f64;
    let lo = (cfg.erase_area.0 * area).ceil() as usize;
    let hi = (cfg.erase_area.1 * area).floor() as usize;
    for _ in 0..10 {
        let target = area * uniform(rng, cfg.erase_area.0, cfg.erase_area.1);
        let ratio = uniform(rng, cfg.erase_ratio.0.ln(), cfg.erase_ratio.1.ln()).exp();
        let eh = ((target * ratio).sqrt().round() as usize).max(1);
        if eh > height {
            continue;
        }
        let w_min = lo.div_ceil(eh);
        let w_max = hi / eh;
        if w_min > w_max {
            continue;
        }
        let ew = ((target / eh as f64).round() as usize).clamp(w_min, w_max);
        if ew == 0 || ew > width {
            continue;
        }
        let x = rng.gen_range(0..=width - ew);
        let y = rng.gen_range(0..=height - eh);
        return Some((x, y, ew, eh));
    }
    None
}

/// Inverse-mapped affine warp about the image centre; uncovered pixels become black.
///
/// `forward` is the 2×2 linear part applied to centred coordinates, followed
/// by the translation `(tx, ty)`.
fn warp_affine(img: &RasterImage, forward: [f64; 4], tx: f64, ty: f64) -> RasterImage {
    let [a, b, c, d] = forward;
    let det = a * d - b * c;
    let inv = [d / det, -b / det, -c / det, a / det];
    let cx = (img.width() as f64 - 1.0) / 2.0;
    let cy = (img.height() as f64 - 1.0) / 2.0;
    let ch = img.channels();
    let mut out =
        RasterImage::filled(img.width(), img.height(), &vec![0u8; ch]).expect("same size");
    for y in 0..img.height() {
        for x in 0..img.width() {
            let u = x as f64 - cx - tx;
            let v = y as f64 - cy - ty;
            let sx = inv[0] * u + inv[1] * v + cx;
            let sy = inv[2] * u + inv[3] * v + cy;
            let dst = out.pixel_mut(x, y);
            for (chan, slot) in dst.iter_mut().enumerate() {
                if let Some(value) = bilinear(img, sx, sy, chan) {
                    *slot = clamp_u8(value);
                }
            }
        }
    }
    out
}

pub fn rotate(img: &RasterImage, degrees: f64) -> RasterImage {
    let (s, c) = degrees.to_radians().sin_cos();
    warp_affine(img, [c, -s, s, c], 0.0, 0.0)
}

pub fn hflip(img: &RasterImage) -> RasterImage {
    let mut out = img.clone();
    let w = img.width();
    for y in 0..img.height() {
        for x in 0..w {
            out.pixel_mut(x, y).copy_from_slice(img.pixel(w - 1 - x, y));
        }
    }
    out
}

fn gray_of(p: &[f64]) -> f64 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

/// Brightness, contrast and saturation factors plus a hue shift (fraction of the circle).
pub fn color_jitter(
    img: &RasterImage,
    brightness: f64,
    contrast: f64,
    saturation: f64,
    hue: f64,
) -> RasterImage {
    if img.channels() != 3 {
        let f = brightness;
        return img.map_samples(|v| clamp_u8(v as f64 * f));
    }
    let mut px: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    if brightness != 1.0 {
        px.iter_mut()
            .for_each(|v| *v = (*v * brightness).clamp(0.0, 255.0));
    }
    if contrast != 1.0 {
        let mean = px.chunks_exact(3).map(gray_of).sum::<f64>() / img.pixel_count() as f64;
        px.iter_mut()
            .for_each(|v| *v = (mean + (*v - mean) * contrast).clamp(0.0, 255.0));
    }
    if saturation != 1.0 {
        for p in px.chunks_exact_mut(3) {
            let g = gray_of(p);
            for v in p.iter_mut() {
                *v = (g + (*v - g) * saturation).clamp(0.0, 255.0);
            }
        }
    }
    if hue != 0.0 {
        for p in px.chunks_exact_mut(3) {
            let (r, g, b) = (p[0] / 255.0, p[1] / 255.0, p[2] / 255.0);
            let max = r.max(g).max(b);
            let min = r.min(g).min(b);
            let delta = max - min;
            if delta == 0.0 {
                continue;
            }
            let h = if max == r {
                60.0 * ((g - b) / delta).rem_euclid(6.0)
            } else if max == g {
                60.0 * ((b - r) / delta + 2.0)
            } else {
                60.0 * ((r - g) / delta + 4.0)
            };
            let rgb = hsv_to_rgb_f(h + hue * 360.0, delta / max, max);
            for (v, n) in p.iter_mut().zip(rgb) {
                *v = n * 255.0;
            }
        }
    }
    let data = px.into_iter().map(clamp_u8).collect();
    RasterImage::new(img.width(), img.height(), 3, data).expect("same shape")
}

pub fn erase(img: &RasterImage, rect: Rect) -> RasterImage {
    let (x0, y0, w, h) = rect;
    let mut out = img.clone();
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            out.pixel_mut(x, y).fill(0);
        }
    }
    out
}

/// Applies the full augmentation chain; the result is `output_size` square and RGB.
pub fn augment<R: Rng + ?Sized>(
    img: &RasterImage,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<RasterImage> {
    cfg.validate()?;
    let rgb;
    let img = if img.channels() == 3 {
        img
    } else {
        rgb = RasterImage::from_planes(&[img.clone(), img.clone(), img.clone()])?;
        &rgb
    };
    let size = cfg.output_size;

    let (x, y, w, h) = plan_crop(img.width(), img.height(), cfg, rng);
    let mut cur = resize_bilinear(&img.crop(x, y, w, h)?, size, size);

    let angle = uniform(rng, -cfg.rotation_deg, cfg.rotation_deg);
    if angle != 0.0 {
        cur = rotate(&cur, angle);
    }

    if cfg.hflip_prob > 0.0 && rng.gen_bool(cfg.hflip_prob) {
        cur = hflip(&cur);
    }

    let b = uniform(rng, 1.0 - cfg.brightness, 1.0 + cfg.brightness);
    let c = uniform(rng, 1.0 - cfg.contrast, 1.0 + cfg.contrast);
    let s = uniform(rng, 1.0 - cfg.saturation, 1.0 + cfg.saturation);
    let hshift = uniform(rng, -cfg.hue, cfg.hue);
    if (b, c, s, hshift) != (1.0, 1.0, 1.0, 0.0) {
        cur = color_jitter(&cur, b, c, s, hshift);
    }

    let max_t = cfg.translate * size as f64;
    let tx = uniform(rng, -max_t, max_t);
    let ty = uniform(rng, -max_t, max_t);
    let scale = uniform(rng, cfg.affine_scale.0, cfg.affine_scale.1);
    let shear = uniform(rng, -cfg.shear_deg, cfg.shear_deg)
        .to_radians()
        .tan();
    if (tx, ty, scale, shear) != (0.0, 0.0, 1.0, 0.0) {
        cur = warp_affine(&cur, [scale, scale * shear, 0.0, scale], tx, ty);
    }

    if cfg.erase_prob > 0.0 && rng.gen_bool(cfg.erase_prob) {
        if let Some(rect) = plan_erase(size, size, cfg, rng) {
            cur = erase(&cur, rect);
        }
    }

    Ok(resize_bilinear(&cur, size, size))
}
