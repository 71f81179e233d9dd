//! Difference-of-Gaussians keypoints with gradient-histogram descriptors.
//!
//! Follows the classic scale-space layout: octaves of progressively blurred
//! images, extrema of adjacent differences refined to subpixel accuracy,
//! dominant gradient orientations, and 4×4×8 orientation-histogram
//! descriptors normalised with the 0.2 clamp.

use std::f32::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RasterImage;

pub const DESCRIPTOR_LEN: usize = 128;

const INITIAL_SIGMA: f32 = 0.5;
const ORI_BINS: usize = 36;
const ORI_SIGMA_FACTOR: f32 = 1.5;
const ORI_RADIUS_FACTOR: f32 = 3.0 * ORI_SIGMA_FACTOR;
const ORI_PEAK_RATIO: f32 = 0.8;
const DESC_WIDTH: usize = 4;
const DESC_BINS: usize = 8;
const DESC_SCALE_FACTOR: f32 = 3.0;
const DESC_MAG_CLAMP: f32 = 0.2;
const MAX_REFINE_STEPS: usize = 5;
const BORDER: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub octave_layers: usize,
    pub sigma: f32,
    pub contrast_threshold: f32,
    pub edge_threshold: f32,
    /// Strongest keypoints kept per image.
    pub max_keypoints: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            octave_layers: 3,
            sigma: 1.6,
            contrast_threshold: 0.04,
            edge_threshold: 10.0,
            max_keypoints: 1500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    /// Blur scale (σ) in input-image pixels.
    pub scale: f32,
    /// Dominant gradient direction, radians in `[0, 2π)`.
    pub orientation: f32,
    pub response: f32,
    pub descriptor: Vec<f32>,
}

/// Single-channel f32 plane.
#[derive(Clone)]
struct Plane {
    w: usize,
    h: usize,
    v: Vec<f32>,
}

impl Plane {
    #[inline]
    fn at(&self, x: usize, y: usize) -> f32 {
        self.v[y * self.w + x]
    }
}

fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = (sigma * 4.0).ceil().max(1.0) as isize;
    let mut k: Vec<f32> = (-radius..=radius)
        .map(|i| (-(i * i) as f32 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f32 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

fn blur(src: &Plane, sigma: f32) -> Plane {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (w, h) = (src.w, src.h);
    let ru = r as usize;
    let mut tmp = vec![0.0f32; w * h];
    let mut padded = vec![0.0f32; w + 2 * ru];
    for y in 0..h {
        let row = &src.v[y * w..(y + 1) * w];
        padded[..ru].fill(row[0]);
        padded[ru..ru + w].copy_from_slice(row);
        padded[ru + w..].fill(row[w - 1]);
        let out = &mut tmp[y * w..(y + 1) * w];
        for (i, &kv) in k.iter().enumerate() {
            for (o, &p) in out.iter_mut().zip(&padded[i..i + w]) {
                *o += kv * p;
            }
        }
    }
    let mut out = vec![0.0f32; w * h];
    for (i, &kv) in k.iter().enumerate() {
        for y in 0..h {
            let yy = (y as isize + i as isize - r).clamp(0, h as isize - 1) as usize;
            let src_row = &tmp[yy * w..(yy + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, &s) in dst_row.iter_mut().zip(src_row) {
                *d += kv * s;
            }
        }
    }
    Plane { w, h, v: out }
}

fn downsample(src: &Plane) -> Plane {
    let w = src.w / 2;
    let h = src.h / 2;
    let mut v = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            v.push(src.at(2 * x, 2 * y));
        }
    }
    Plane { w, h, v }
}

struct Octave {
    gauss: Vec<Plane>,
    dog: Vec<Plane>,
}

fn build_pyramid(gray: &RasterImage, cfg: &DetectorConfig) -> Vec<Octave> {
    let base = Plane {
        w: gray.width(),
        h: gray.height(),
        v: gray.data().iter().map(|&p| p as f32 / 255.0).collect(),
    };
    let sig_diff = (cfg.sigma * cfg.sigma - 4.0 * INITIAL_SIGMA * INITIAL_SIGMA)
        .max(0.01)
        .sqrt();
    let base = blur(&base, sig_diff);
    let min_side = gray.width().min(gray.height()) as f32;
    let n_octaves = ((min_side.log2() - 4.0).floor() as usize).max(1);
    let s = cfg.octave_layers;
    let k = 2f32.powf(1.0 / s as f32);
    let mut increments = vec![0.0f32; s + 3];
    for (i, inc) in increments.iter_mut().enumerate().skip(1) {
        let prev = cfg.sigma * k.powi(i as i32 - 1);
        let total = prev * k;
        *inc = (total * total - prev * prev).sqrt();
    }
    let mut octaves: Vec<Octave> = Vec::with_capacity(n_octaves);
    for o in 0..n_octaves {
        let first = if o == 0 {
            base.clone()
        } else {
            downsample(&octaves[o - 1].gauss[s])
        };
        if first.w < 2 * BORDER + 3 || first.h < 2 * BORDER + 3 {
            break;
        }
        let mut gauss = Vec::with_capacity(s + 3);
        gauss.push(first);
        for inc in &increments[1..] {
            let next = blur(gauss.last().expect("nonempty"), *inc);
            gauss.push(next);
        }
        let dog = gauss
            .windows(2)
            .map(|pair| Plane {
                w: pair[0].w,
                h: pair[0].h,
                v: pair[1]
                    .v
                    .iter()
                    .zip(&pair[0].v)
                    .map(|(a, b)| a - b)
                    .collect(),
            })
            .collect();
        octaves.push(Octave { gauss, dog });
    }
    octaves
}

fn is_extremum(dog: &[Plane], layer: usize, x: usize, y: usize, threshold: f32) -> bool {
    let v = dog[layer].at(x, y);
    if v.abs() <= threshold {
        return false;
    }
    for plane in &dog[layer - 1..=layer + 1] {
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                let n = plane.at(xx, yy);
                if v > 0.0 && n > v || v < 0.0 && n < v {
                    return false;
                }
            }
        }
    }
    true
}

struct Refined {
    x: f32,
    y: f32,
    layer: usize,
    offset_layer: f32,
    response: f32,
    ix: usize,
    iy: usize,
}

fn refine(
    dog: &[Plane],
    mut layer: usize,
    mut x: usize,
    mut y: usize,
    cfg: &DetectorConfig,
) -> Option<Refined> {
    let s = cfg.octave_layers;
    let (w, h) = (dog[0].w, dog[0].h);
    let mut offset = [0.0f32; 3];
    let mut grad = [0.0f32; 3];
    let mut converged = false;
    for _ in 0..MAX_REFINE_STEPS {
        let (p, c, n) = (&dog[layer - 1], &dog[layer], &dog[layer + 1]);
        let v = c.at(x, y);
        let dx = (c.at(x + 1, y) - c.at(x - 1, y)) * 0.5;
        let dy = (c.at(x, y + 1) - c.at(x, y - 1)) * 0.5;
        let ds = (n.at(x, y) - p.at(x, y)) * 0.5;
        let dxx = c.at(x + 1, y) + c.at(x - 1, y) - 2.0 * v;
        let dyy = c.at(x, y + 1) + c.at(x, y - 1) - 2.0 * v;
        let dss = n.at(x, y) + p.at(x, y) - 2.0 * v;
        let dxy = (c.at(x + 1, y + 1) - c.at(x - 1, y + 1) - c.at(x + 1, y - 1)
            + c.at(x - 1, y - 1))
            * 0.25;
        let dxs = (n.at(x + 1, y) - n.at(x - 1, y) - p.at(x + 1, y) + p.at(x - 1, y)) * 0.25;
        let dys = (n.at(x, y + 1) - n.at(x, y - 1) - p.at(x, y + 1) + p.at(x, y - 1)) * 0.25;
        let hess = nalgebra::Matrix3::new(
            dxx as f64, dxy as f64, dxs as f64, dxy as f64, dyy as f64, dys as f64, dxs as f64,
            dys as f64, dss as f64,
        );
        grad = [dx, dy, ds];
        let g = nalgebra::Vector3::new(dx as f64, dy as f64, ds as f64);
        let sol = hess.lu().solve(&g)?;
        offset = [-sol[0] as f32, -sol[1] as f32, -sol[2] as f32];
        if offset.iter().all(|o| o.abs() < 0.5) {
            converged = true;
            break;
        }
        if offset.iter().any(|o| o.abs() > (i32::MAX / 3) as f32) {
            return None;
        }
        let nx = x as isize + offset[0].round() as isize;
        let ny = y as isize + offset[1].round() as isize;
        let nl = layer as isize + offset[2].round() as isize;
        if nl < 1
            || nl > s as isize
            || nx < BORDER as isize
            || nx >= (w - BORDER) as isize
            || ny < BORDER as isize
            || ny >= (h - BORDER) as isize
        {
            return None;
        }
        x = nx as usize;
        y = ny as usize;
        layer = nl as usize;
    }
    if !converged {
        return None;
    }
    let c = &dog[layer];
    let v = c.at(x, y);
    let response = v + 0.5 * (grad[0] * offset[0] + grad[1] * offset[1] + grad[2] * offset[2]);
    if response.abs() * (s as f32) < cfg.contrast_threshold {
        return None;
    }
    let dxx = c.at(x + 1, y) + c.at(x - 1, y) - 2.0 * v;
    let dyy = c.at(x, y + 1) + c.at(x, y - 1) - 2.0 * v;
    let dxy =
        (c.at(x + 1, y + 1) - c.at(x - 1, y + 1) - c.at(x + 1, y - 1) + c.at(x - 1, y - 1)) * 0.25;
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    let r = cfg.edge_threshold;
    if det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det {
        return None;
    }
    Some(Refined {
        x: x as f32 + offset[0],
        y: y as f32 + offset[1],
        layer,
        offset_layer: offset[2],
        response: response.abs(),
        ix: x,
        iy: y,
    })
}

fn orientations(img: &Plane, x: usize, y: usize, sigma: f32) -> Vec<f32> {
    let radius = (ORI_RADIUS_FACTOR * sigma).round() as isize;
    let weight_scale = -1.0 / (2.0 * (ORI_SIGMA_FACTOR * sigma).powi(2));
    let mut hist = [0.0f32; ORI_BINS];
    for dy in -radius..=radius {
        let yy = y as isize + dy;
        if yy <= 0 || yy >= img.h as isize - 1 {
            continue;
        }
        for dx in -radius..=radius {
            let xx = x as isize + dx;
            if xx <= 0 || xx >= img.w as isize - 1 {
                continue;
            }
            let (xx, yy) = (xx as usize, yy as usize);
            let gx = img.at(xx + 1, yy) - img.at(xx - 1, yy);
            let gy = img.at(xx, yy + 1) - img.at(xx, yy - 1);
            let mag = (gx * gx + gy * gy).sqrt();
            let ang = gy.atan2(gx).rem_euclid(2.0 * PI);
            let wgt = (((dx * dx + dy * dy) as f32) * weight_scale).exp();
            let bin = ((ang / (2.0 * PI) * ORI_BINS as f32).round() as usize) % ORI_BINS;
            hist[bin] += wgt * mag;
        }
    }
    let mut smooth = [0.0f32; ORI_BINS];
    for i in 0..ORI_BINS {
        let at = |d: isize| hist[(i as isize + d).rem_euclid(ORI_BINS as isize) as usize];
        smooth[i] = (at(-2) + at(2)) / 16.0 + (at(-1) + at(1)) * 4.0 / 16.0 + at(0) * 6.0 / 16.0;
    }
    let max = smooth.iter().copied().fold(0.0f32, f32::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 0..ORI_BINS {
        let l = smooth[(i + ORI_BINS - 1) % ORI_BINS];
        let r = smooth[(i + 1) % ORI_BINS];
        let v = smooth[i];
        if v > l && v > r && v >= ORI_PEAK_RATIO * max {
            let offset = 0.5 * (l - r) / (l - 2.0 * v + r);
            let bin = (i as f32 + offset).rem_euclid(ORI_BINS as f32);
            out.push(bin * 2.0 * PI / ORI_BINS as f32);
        }
    }
    out
}

fn descriptor(img: &Plane, x: f32, y: f32, sigma: f32, angle: f32) -> Option<Vec<f32>> {
    let d = DESC_WIDTH as isize;
    let n = DESC_BINS;
    let hist_width = DESC_SCALE_FACTOR * sigma;
    let (sin_t, cos_t) = angle.sin_cos();
    let (cos_t, sin_t) = (cos_t / hist_width, sin_t / hist_width);
    let radius = (hist_width * std::f32::consts::SQRT_2 * (d as f32 + 1.0) * 0.5).round() as isize;
    let radius = radius.min(((img.w * img.w + img.h * img.h) as f32).sqrt() as isize);
    let exp_scale = -1.0 / (d as f32 * d as f32 * 0.5);
    let bins_per_rad = n as f32 / (2.0 * PI);
    let cols = DESC_WIDTH + 2;
    let mut hist = vec![0.0f32; cols * cols * (n + 2)];
    let (px, py) = (x.round() as isize, y.round() as isize);
    for i in -radius..=radius {
        for j in -radius..=radius {
            let c_rot = j as f32 * cos_t + i as f32 * sin_t;
            let r_rot = i as f32 * cos_t - j as f32 * sin_t;
            let rbin = r_rot + d as f32 / 2.0 - 0.5;
            let cbin = c_rot + d as f32 / 2.0 - 0.5;
            if rbin <= -1.0 || rbin >= d as f32 || cbin <= -1.0 || cbin >= d as f32 {
                continue;
            }
            let yy = py + i;
            let xx = px + j;
            if yy <= 0 || yy >= img.h as isize - 1 || xx <= 0 || xx >= img.w as isize - 1 {
                continue;
            }
            let (xx, yy) = (xx as usize, yy as usize);
            let gx = img.at(xx + 1, yy) - img.at(xx - 1, yy);
            let gy = img.at(xx, yy + 1) - img.at(xx, yy - 1);
            let mag =
                (gx * gx + gy * gy).sqrt() * ((c_rot * c_rot + r_rot * r_rot) * exp_scale).exp();
            let ori = (gy.atan2(gx) - angle).rem_euclid(2.0 * PI);
            let obin = ori * bins_per_rad;

            let r0 = rbin.floor();
            let c0 = cbin.floor();
            let o0 = obin.floor();
            let (rf, cf, of) = (rbin - r0, cbin - c0, obin - o0);
            let r0 = r0 as isize;
            let c0 = c0 as isize;
            let o0 = (o0 as isize).rem_euclid(n as isize) as usize;
            for (dr, wr) in [(0, 1.0 - rf), (1, rf)] {
                for (dc, wc) in [(0, 1.0 - cf), (1, cf)] {
                    for (dori, wo) in [(0, 1.0 - of), (1, of)] {
                        let r = (r0 + dr + 1) as usize;
                        let c = (c0 + dc + 1) as usize;
                        let o = (o0 + dori) % n;
                        hist[(r * cols + c) * (n + 2) + o] += mag * wr * wc * wo;
                    }
                }
            }
        }
    }
    let mut desc = Vec::with_capacity(DESCRIPTOR_LEN);
    for r in 0..DESC_WIDTH {
        for c in 0..DESC_WIDTH {
            let base = ((r + 1) * cols + c + 1) * (n + 2);
            desc.extend_from_slice(&hist[base..base + n]);
        }
    }
    let norm = desc.iter().map(|v| v * v).sum::<f32>().sqrt();
    if norm <= 0.0 {
        return None;
    }
    let clamp = DESC_MAG_CLAMP * norm;
    desc.iter_mut().for_each(|v| *v = v.min(clamp));
    let norm = desc.iter().map(|v| v * v).sum::<f32>().sqrt();
    if norm <= 0.0 {
        return None;
    }
    desc.iter_mut().for_each(|v| *v /= norm);
    Some(desc)
}

/// Detects keypoints and computes their descriptors on a grayscale image.
pub fn detect_keypoints(gray: &RasterImage, cfg: &DetectorConfig) -> Result<Vec<Keypoint>> {
    gray.require_channels(1)?;
    if gray.width() < 2 * BORDER + 3 || gray.height() < 2 * BORDER + 3 {
        return Err(Error::FeaturelessImage);
    }
    let octaves = build_pyramid(gray, cfg);
    let s = cfg.octave_layers;
    let prefilter = 0.5 * cfg.contrast_threshold / s as f32;

    struct Candidate {
        octave: usize,
        refined: Refined,
    }
    let mut candidates = Vec::new();
    for (o, oct) in octaves.iter().enumerate() {
        let (w, h) = (oct.dog[0].w, oct.dog[0].h);
        for layer in 1..=s {
            for y in BORDER..h - BORDER {
                for x in BORDER..w - BORDER {
                    if is_extremum(&oct.dog, layer, x, y, prefilter) {
                        if let Some(refined) = refine(&oct.dog, layer, x, y, cfg) {
                            candidates.push(Candidate { octave: o, refined });
                        }
                    }
                }
            }
        }
    }
    // Refinement can land two seeds on the same extremum.
    candidates.sort_by(|a, b| {
        (a.octave, a.refined.layer, a.refined.iy, a.refined.ix).cmp(&(
            b.octave,
            b.refined.layer,
            b.refined.iy,
            b.refined.ix,
        ))
    });
    candidates.dedup_by(|a, b| {
        (a.octave, a.refined.layer, a.refined.iy, a.refined.ix)
            == (b.octave, b.refined.layer, b.refined.iy, b.refined.ix)
    });
    candidates.sort_by(|a, b| {
        b.refined
            .response
            .total_cmp(&a.refined.response)
            .then(a.octave.cmp(&b.octave))
            .then(a.refined.iy.cmp(&b.refined.iy))
            .then(a.refined.ix.cmp(&b.refined.ix))
    });
    candidates.truncate(cfg.max_keypoints);

    let mut keypoints = Vec::with_capacity(candidates.len());
    for cand in &candidates {
        let r = &cand.refined;
        let oct = &octaves[cand.octave];
        let octave_sigma = cfg.sigma * 2f32.powf((r.layer as f32 + r.offset_layer) / s as f32);
        let img = &oct.gauss[r.layer];
        let factor = (1usize << cand.octave) as f32;
        for angle in orientations(img, r.ix, r.iy, octave_sigma) {
            if let Some(descriptor) = descriptor(img, r.x, r.y, octave_sigma, angle) {
                keypoints.push(Keypoint {
                    x: r.x * factor,
                    y: r.y * factor,
                    scale: octave_sigma * factor,
                    orientation: angle,
                    response: r.response,
                    descriptor,
                });
            }
        }
    }
    keypoints.truncate(cfg.max_keypoints);
    if keypoints.is_empty() {
        return Err(Error::FeaturelessImage);
    }
    Ok(keypoints)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_image_is_featureless() {
        let img = RasterImage::filled(128, 128, &[200]).unwrap();
        assert!(matches!(
            detect_keypoints(&img, &DetectorConfig::default()),
            Err(Error::FeaturelessImage)
        ));
    }

    #[test]
    fn needs_gray_input() {
        let img = RasterImage::filled(64, 64, &[1, 2, 3]).unwrap();
        assert!(detect_keypoints(&img, &DetectorConfig::default()).is_err());
    }

    #[test]
    fn single_blob_is_found_at_its_centre() {
        let img = RasterImage::from_gray_fn(96, 96, |x, y| {
            let d2 = (x as f32 - 47.3).powi(2) + (y as f32 - 50.6).powi(2);
            (40.0 + 180.0 * (-d2 / (2.0 * 5.0 * 5.0)).exp()) as u8
        })
        .unwrap();
        let kps = detect_keypoints(&img, &DetectorConfig::default()).unwrap();
        let best = &kps[0];
        assert!(
            (best.x - 47.3).abs() < 0.6 && (best.y - 50.6).abs() < 0.6,
            "{best:?}"
        );
        let norm: f32 = best.descriptor.iter().map(|v| v * v).sum::<f32>().sqrt();
        assert!((norm - 1.0).abs() < 1e-4);
        assert_eq!(best.descriptor.len(), DESCRIPTOR_LEN);
    }

    #[test]
    fn deterministic() {
        let img =
            RasterImage::from_gray_fn(128, 100, |x, y| (((x / 9) ^ (y / 7)) * 41 % 256) as u8)
                .unwrap();
        let a = detect_keypoints(&img, &DetectorConfig::default()).unwrap();
        let b = detect_keypoints(&img, &DetectorConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
