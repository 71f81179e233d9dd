//! Colour-space conversions on 8-bit rasters.
//!
//! HSV is stored with all three channels scaled to 0–255 (hue maps the
//! 0–360° circle linearly). LAB uses the D65 white point with the common
//! 8-bit packing `L·255/100`, `a + 128`, `b + 128`.

use std::sync::OnceLock;

use super::image::{clamp_u8, RasterImage};
use crate::error::{Error, Result};

/// BT.601 luma, rounded half away from zero.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    clamp_u8(0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
}

pub fn to_grayscale(img: &RasterImage) -> Result<RasterImage> {
    match img.channels() {
        1 => Err(Error::AlreadyGrayscale),
        _ => {
            let data = img
                .data()
                .chunks_exact(3)
                .map(|p| luma(p[0], p[1], p[2]))
                .collect();
            RasterImage::new(img.width(), img.height(), 1, data)
        }
    }
}

/// Grayscale view of any raster: converts RGB, copies gray.
pub fn to_luma(img: &RasterImage) -> RasterImage {
    match to_grayscale(img) {
        Ok(g) => g,
        Err(_) => img.clone(),
    }
}

/// Hexcone HSV of one pixel, channels scaled to 0–255.
pub fn hsv_pixel(r: u8, g: u8, b: u8) -> [u8; 3] {
    let (ri, gi, bi) = (r as i32, g as i32, b as i32);
    let max = ri.max(gi).max(bi);
    let delta = max - ri.min(gi).min(bi);
    if delta == 0 {
        return [0, 0, max as u8];
    }
    // Hue in sixths of a turn times delta, kept integral so one division
    // decides the rounding.
    let sixths = if max == ri {
        (gi - bi).rem_euclid(6 * delta)
    } else if max == gi {
        2 * delta + bi - ri
    } else {
        4 * delta + ri - gi
    };
    let h = clamp_u8(255.0 * sixths as f64 / (6 * delta) as f64);
    let s = clamp_u8(255.0 * delta as f64 / max as f64);
    [h, s, max as u8]
}

/// Inverse of [`hsv_pixel`] on continuous values (`h` in degrees, `s`, `v` in 0–1).
pub fn hsv_to_rgb_f(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

pub fn rgb_to_hsv(img: &RasterImage) -> Result<RasterImage> {
    img.require_channels(3)?;
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|p| hsv_pixel(p[0], p[1], p[2]))
        .collect();
    RasterImage::new(img.width(), img.height(), 3, data)
}

/// Saturation channel only, 0–255.
pub fn saturation(img: &RasterImage) -> Result<Vec<u8>> {
    img.require_channels(3)?;
    Ok(img
        .data()
        .chunks_exact(3)
        .map(|p| {
            let max = p[0].max(p[1]).max(p[2]);
            let min = p[0].min(p[1]).min(p[2]);
            if max == 0 {
                0
            } else {
                clamp_u8(255.0 * (max - min) as f64 / max as f64)
            }
        })
        .collect())
}

const WHITE_D65: [f64; 3] = [0.950_47, 1.0, 1.088_83];
const LAB_EPS: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPS {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let t = f * f * f;
    if t > LAB_EPS {
        t
    } else {
        (116.0 * f - 16.0) / LAB_KAPPA
    }
}

/// Continuous CIE L*a*b* (L in 0–100) of an 8-bit sRGB pixel.
pub fn lab_pixel(r: u8, g: u8, b: u8) -> [f64; 3] {
    let rl = srgb_to_linear(r as f64 / 255.0);
    let gl = srgb_to_linear(g as f64 / 255.0);
    let bl = srgb_to_linear(b as f64 / 255.0);
    let x = 0.412_456_4 * rl + 0.357_576_1 * gl + 0.180_437_5 * bl;
    let y = 0.212_672_9 * rl + 0.715_152_2 * gl + 0.072_175_0 * bl;
    let z = 0.019_333_9 * rl + 0.119_192_0 * gl + 0.950_304_1 * bl;
    let fx = lab_f(x / WHITE_D65[0]);
    let fy = lab_f(y / WHITE_D65[1]);
    let fz = lab_f(z / WHITE_D65[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// 8-bit sRGB of a continuous L*a*b* triple.
pub fn lab_to_rgb_pixel(l: f64, a: f64, b: f64) -> [u8; 3] {
    let fy = (l + 16.0) / 116.0;
    let fx = fy + a / 500.0;
    let fz = fy - b / 200.0;
    let x = lab_f_inv(fx) * WHITE_D65[0];
    let y = lab_f_inv(fy) * WHITE_D65[1];
    let z = lab_f_inv(fz) * WHITE_D65[2];
    let rl = 3.240_454_2 * x - 1.537_138_5 * y - 0.498_531_4 * z;
    let gl = -0.969_266_0 * x + 1.876_010_8 * y + 0.041_556_0 * z;
    let bl = 0.055_643_4 * x - 0.204_025_9 * y + 1.057_225_2 * z;
    [rl, gl, bl].map(|c| clamp_u8(linear_to_srgb(c.clamp(0.0, 1.0)) * 255.0))
}

fn linear_lut() -> &'static [f64; 256] {
    static LUT: OnceLock<[f64; 256]> = OnceLock::new();
    LUT.get_or_init(|| std::array::from_fn(|v| srgb_to_linear(v as f64 / 255.0)))
}

/// `t[k-1]` is the smallest linear value that encodes to at least `k`.
fn encode_thresholds() -> &'static [f64; 255] {
    static T: OnceLock<[f64; 255]> = OnceLock::new();
    T.get_or_init(|| {
        let encode = |c: f64| clamp_u8(linear_to_srgb(c) * 255.0);
        std::array::from_fn(|i| {
            let k = i as u8 + 1;
            // bisect on the bit pattern; positive doubles order like their bits
            let (mut lo, mut hi) = (0u64, 1f64.to_bits());
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if encode(f64::from_bits(mid)) >= k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            f64::from_bits(hi)
        })
    })
}

#[inline]
fn encode_srgb(c: f64) -> u8 {
    encode_thresholds().partition_point(|&t| t <= c) as u8
}

pub fn rgb_to_lab(img: &RasterImage) -> Result<RasterImage> {
    img.require_channels(3)?;
    let lin = linear_lut();
    let mut data = Vec::with_capacity(img.data().len());
    // Runs of one colour (paper backgrounds) reuse the previous result.
    let mut last: Option<([u8; 3], [u8; 3])> = None;
    for p in img.data().chunks_exact(3) {
        let key = [p[0], p[1], p[2]];
        if let Some((k, v)) = last {
            if k == key {
                data.extend_from_slice(&v);
                continue;
            }
        }
        let (rl, gl, bl) = (lin[p[0] as usize], lin[p[1] as usize], lin[p[2] as usize]);
        let x = 0.412_456_4 * rl + 0.357_576_1 * gl + 0.180_437_5 * bl;
        let y = 0.212_672_9 * rl + 0.715_152_2 * gl + 0.072_175_0 * bl;
        let z = 0.019_333_9 * rl + 0.119_192_0 * gl + 0.950_304_1 * bl;
        let fx = lab_f(x / WHITE_D65[0]);
        let fy = lab_f(y / WHITE_D65[1]);
        let fz = lab_f(z / WHITE_D65[2]);
        let v = [
            clamp_u8((116.0 * fy - 16.0) * 255.0 / 100.0),
            clamp_u8(500.0 * (fx - fy) + 128.0),
            clamp_u8(200.0 * (fy - fz) + 128.0),
        ];
        data.extend_from_slice(&v);
        last = Some((key, v));
    }
    RasterImage::new(img.width(), img.height(), 3, data)
}

pub fn lab_to_rgb(img: &RasterImage) -> Result<RasterImage> {
    img.require_channels(3)?;
    // Y depends on L alone, X on (L, a) and Z on (L, b).
    let fy_of = |l: usize| (l as f64 * 100.0 / 255.0 + 16.0) / 116.0;
    let ys: Vec<f64> = (0..256)
        .map(|l| lab_f_inv(fy_of(l)) * WHITE_D65[1])
        .collect();
    let mut xs = vec![0.0; 65536];
    let mut zs = vec![0.0; 65536];
    for l in 0..256 {
        let fy = fy_of(l);
        for c in 0..256 {
            xs[l * 256 + c] = lab_f_inv(fy + (c as f64 - 128.0) / 500.0) * WHITE_D65[0];
            zs[l * 256 + c] = lab_f_inv(fy - (c as f64 - 128.0) / 200.0) * WHITE_D65[2];
        }
    }
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|p| {
            let l = p[0] as usize;
            let x = xs[l * 256 + p[1] as usize];
            let y = ys[l];
            let z = zs[l * 256 + p[2] as usize];
            let rl = 3.240_454_2 * x - 1.537_138_5 * y - 0.498_531_4 * z;
            let gl = -0.969_266_0 * x + 1.876_010_8 * y + 0.041_556_0 * z;
            let bl = 0.055_643_4 * x - 0.204_025_9 * y + 1.057_225_2 * z;
            [rl, gl, bl].map(|c| encode_srgb(c.clamp(0.0, 1.0)))
        })
        .collect();
    RasterImage::new(img.width(), img.height(), 3, data)
}
