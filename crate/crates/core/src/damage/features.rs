use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::dbscan::dbscan;
use super::DamageConfig;
use crate::error::{Error, Result};
use crate::raster::{erode, to_luma, BinaryMask, RasterImage};

/// A DBSCAN group of reference contour points and the patch it spans.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCluster {
    pub id: usize,
    pub points: Vec<(u32, u32)>,
    /// Inclusive bounding box of the member points, reference coordinates.
    pub bbox: (usize, usize, usize, usize),
    /// Top-left corner of `template` in the reference.
    pub template_origin: (usize, usize),
    /// Grayscale crop of the bounding box, padded.
    pub template: RasterImage,
}

impl FeatureCluster {
    pub fn summary(&self) -> ClusterSummary {
        ClusterSummary {
            id: self.id,
            points: self.points.len(),
            bbox: self.bbox,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub id: usize,
    pub points: usize,
    pub bbox: (usize, usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMatch {
    pub cluster: usize,
    /// Peak zero-mean NCC over the search window.
    pub score: f64,
    /// Top-left of the best placement, reference coordinates.
    pub peak: (usize, usize),
    pub missing: bool,
}

/// Local-mean adaptive threshold: dark pixels at least `offset` below the
/// mean of their `window × window` neighbourhood.
pub fn adaptive_threshold(gray: &RasterImage, window: usize, offset: f64) -> BinaryMask {
    let (w, h) = (gray.width(), gray.height());
    let iw = w + 1;
    let mut integral = vec![0u64; iw * (h + 1)];
    for y in 0..h {
        let mut row = 0u64;
        for x in 0..w {
            row += gray.sample(x, y, 0) as u64;
            integral[(y + 1) * iw + x + 1] = integral[y * iw + x + 1] + row;
        }
    }
    let r = window / 2;
    BinaryMask::from_fn(w, h, |x, y| {
        let (x0, y0) = (x.saturating_sub(r), y.saturating_sub(r));
        let (x1, y1) = ((x + r + 1).min(w), (y + r + 1).min(h));
        let sum = integral[y1 * iw + x1] + integral[y0 * iw + x0]
            - integral[y0 * iw + x1]
            - integral[y1 * iw + x0];
        let mean = sum as f64 / ((x1 - x0) * (y1 - y0)) as f64;
        (gray.sample(x, y, 0) as f64) < mean - offset
    })
}

/// Boundary pixels of the adaptive-threshold map that lie well inside the
/// foreground, in raster order, thinned by a fixed stride to at most
/// `max_contour_points`.
pub fn contour_points(
    reference: &RasterImage,
    foreground: &BinaryMask,
    config: &DamageConfig,
) -> Vec<(u32, u32)> {
    let gray = to_luma(reference);
    let ink = adaptive_threshold(&gray, config.adaptive_window, config.adaptive_offset);
    let inner = erode(foreground, config.adaptive_window / 2);
    let (w, h) = (ink.width(), ink.height());
    let mut pts = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !ink.get(x, y) || !inner.get(x, y) {
                continue;
            }
            let boundary = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !ink.get(x - 1, y)
                || !ink.get(x + 1, y)
                || !ink.get(x, y - 1)
                || !ink.get(x, y + 1);
            if boundary {
                pts.push((x as u32, y as u32));
            }
        }
    }
    let max = config.max_contour_points.max(1);
    if pts.len() > max {
        let stride = pts.len().div_ceil(max);
        pts = pts.into_iter().step_by(stride).collect();
    }
    pts
}

/// Clusters the reference's salient contour points into motifs.
pub fn extract_feature_clusters(
    reference: &RasterImage,
    foreground: &BinaryMask,
    config: &DamageConfig,
) -> Result<Vec<FeatureCluster>> {
    if !foreground.matches_image(reference) {
        return Err(Error::SizeMismatch("foreground mask vs reference".into()));
    }
    let pts = contour_points(reference, foreground, config);
    let (w, h) = (reference.width(), reference.height());
    let diag = ((w * w + h * h) as f64).sqrt();
    let coords: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
    let labels = dbscan(&coords, config.dbscan_eps * diag, config.dbscan_min_samples);
    let n_labels = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut groups: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n_labels];
    for (p, l) in pts.iter().zip(&labels) {
        if let Some(l) = l {
            groups[*l].push(*p);
        }
    }
    let gray = to_luma(reference);
    let pad = config.template_padding;
    let clusters: Vec<FeatureCluster> = groups
        .into_iter()
        .filter(|g| g.len() >= config.dbscan_min_samples)
        .enumerate()
        .map(|(id, points)| {
            let x0 = points.iter().map(|p| p.0).min().expect("nonempty") as usize;
            let x1 = points.iter().map(|p| p.0).max().expect("nonempty") as usize;
            let y0 = points.iter().map(|p| p.1).min().expect("nonempty") as usize;
            let y1 = points.iter().map(|p| p.1).max().expect("nonempty") as usize;
            let tx0 = x0.saturating_sub(pad);
            let ty0 = y0.saturating_sub(pad);
            let tx1 = (x1 + pad).min(w - 1);
            let ty1 = (y1 + pad).min(h - 1);
            let template = gray
                .crop(tx0, ty0, tx1 - tx0 + 1, ty1 - ty0 + 1)
                .expect("template box clamped to the image");
            FeatureCluster {
                id,
                points,
                bbox: (x0, y0, x1, y1),
                template_origin: (tx0, ty0),
                template,
            }
        })
        .collect();
    if clusters.is_empty() {
        return Err(Error::NoSalientFeatures);
    }
    Ok(clusters)
}

/// Smallest `m ≥ n` whose only prime factors are 2, 3 and 5.
fn smooth_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Row transforms over the first `rows` rows of `buf`, then column
/// transforms over every column.
fn fft_rows(
    planner: &mut FftPlanner<f64>,
    buf: &mut [Complex<f64>],
    w: usize,
    rows: usize,
    inverse: bool,
) {
    let plan = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    plan.process(&mut buf[..w * rows]);
}

fn fft_cols(
    planner: &mut FftPlanner<f64>,
    buf: &mut [Complex<f64>],
    w: usize,
    h: usize,
    inverse: bool,
) {
    let plan = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    let mut t = vec![Complex::new(0.0, 0.0); w * h];
    for y in 0..h {
        for x in 0..w {
            t[x * h + y] = buf[y * w + x];
        }
    }
    plan.process(&mut t);
    for x in 0..w {
        for y in 0..h {
            buf[y * w + x] = t[x * h + y];
        }
    }
}

/// `Σ_u t(u) · img(p + u)` for every valid placement `p`, row-major over
/// `(ww − tw + 1) × (wh − th + 1)`.
fn cross_correlate(
    planner: &mut FftPlanner<f64>,
    tmpl: &[f64],
    tw: usize,
    th: usize,
    img: &[f64],
    ww: usize,
    wh: usize,
) -> Vec<f64> {
    let (pw, ph) = (ww - tw + 1, wh - th + 1);
    let direct_cost = (pw * ph * tw * th) as f64;
    let fft_cost = 6.0 * (ww * wh) as f64 * ((ww * wh) as f64).log2().max(1.0) * 4.0;
    let mut out = vec![0.0; pw * ph];
    if direct_cost <= fft_cost {
        for py in 0..ph {
            for px in 0..pw {
                let mut acc = 0.0;
                for v in 0..th {
                    let irow = &img[(py + v) * ww + px..(py + v) * ww + px + tw];
                    let trow = &tmpl[v * tw..(v + 1) * tw];
                    acc += irow.iter().zip(trow).map(|(a, b)| a * b).sum::<f64>();
                }
                out[py * pw + px] = acc;
            }
        }
        return out;
    }
    // Zero padding to a 5-smooth size keeps the transforms fast; valid
    // placements never wrap around.
    let (fw, fh) = (smooth_len(ww), smooth_len(wh));
    // The image goes in the real part and the template in the imaginary
    // part; one forward transform then yields both spectra by symmetry.
    let mut z = vec![Complex::new(0.0, 0.0); fw * fh];
    for y in 0..wh {
        for x in 0..ww {
            z[y * fw + x].re = img[y * ww + x];
        }
    }
    for v in 0..th {
        for u in 0..tw {
            z[v * fw + u].im = tmpl[v * tw + u];
        }
    }
    fft_rows(planner, &mut z, fw, wh, false);
    fft_cols(planner, &mut z, fw, fh, false);
    let mut prod = vec![Complex::new(0.0, 0.0); fw * fh];
    for ky in 0..fh {
        let ny = (fh - ky) % fh;
        for kx in 0..fw {
            let nx = (fw - kx) % fw;
            let p = z[ky * fw + kx];
            let q = z[ny * fw + nx].conj();
            let a = (p + q) * 0.5;
            let b = (p - q) * Complex::new(0.0, -0.5);
            prod[ky * fw + kx] = a * b.conj();
        }
    }
    fft_cols(planner, &mut prod, fw, fh, true);
    fft_rows(planner, &mut prod, fw, ph, true);
    let scale = 1.0 / (fw * fh) as f64;
    for py in 0..ph {
        for px in 0..pw {
            out[py * pw + px] = prod[py * fw + px].re * scale;
        }
    }
    out
}

fn plane(img: &RasterImage) -> Vec<f64> {
    img.data().iter().map(|&v| v as f64).collect()
}

/// Best zero-mean normalised cross-correlation of `template` over `window`
/// (both grayscale), with the top-left offset of the best placement.
///
/// A template larger than the window is cropped to the window's size about
/// its centre and scored at the single placement. Flat patches score 0.
pub fn ncc_search(template: &RasterImage, window: &RasterImage) -> Result<(f64, (usize, usize))> {
    let mut planner = FftPlanner::new();
    ncc_search_with(&mut planner, template, window)
}

fn ncc_search_with(
    planner: &mut FftPlanner<f64>,
    template: &RasterImage,
    window: &RasterImage,
) -> Result<(f64, (usize, usize))> {
    template.require_channels(1)?;
    window.require_channels(1)?;
    let (ww, wh) = (window.width(), window.height());
    let template = if template.width() > ww || template.height() > wh {
        let cw = template.width().min(ww);
        let chh = template.height().min(wh);
        template.crop(
            (template.width() - cw) / 2,
            (template.height() - chh) / 2,
            cw,
            chh,
        )?
    } else {
        template.clone()
    };
    let (tw, th) = (template.width(), template.height());
    let n = (tw * th) as f64;
    let mut t = plane(&template);
    let mean = t.iter().sum::<f64>() / n;
    t.iter_mut().for_each(|v| *v -= mean);
    let t_energy: f64 = t.iter().map(|v| v * v).sum();
    if t_energy <= 1e-9 * n {
        return Ok((0.0, (0, 0)));
    }
    let img = plane(window);
    let iw = ww + 1;
    let mut s1 = vec![0.0f64; iw * (wh + 1)];
    let mut s2 = vec![0.0f64; iw * (wh + 1)];
    for y in 0..wh {
        let (mut r1, mut r2) = (0.0, 0.0);
        for x in 0..ww {
            let v = img[y * ww + x];
            r1 += v;
            r2 += v * v;
            s1[(y + 1) * iw + x + 1] = s1[y * iw + x + 1] + r1;
            s2[(y + 1) * iw + x + 1] = s2[y * iw + x + 1] + r2;
        }
    }
    let rect = |s: &[f64], x: usize, y: usize| {
        s[(y + th) * iw + x + tw] + s[y * iw + x] - s[y * iw + x + tw] - s[(y + th) * iw + x]
    };
    let corr = cross_correlate(planner, &t, tw, th, &img, ww, wh);
    let pw = ww - tw + 1;
    let mut best = f64::NEG_INFINITY;
    let mut at = (0, 0);
    for (i, &c) in corr.iter().enumerate() {
        let (px, py) = (i % pw, i / pw);
        let sum = rect(&s1, px, py);
        let var = rect(&s2, px, py) - sum * sum / n;
        let score = if var <= 1e-6 * n {
            0.0
        } else {
            (c / (t_energy * var).sqrt()).clamp(-1.0, 1.0)
        };
        if score > best {
            best = score;
            at = (px, py);
        }
    }
    Ok((best, at))
}

/// Scores every cluster template against the warped image inside a window
/// around the cluster's reference position. `F` is the number of clusters
/// scoring below `ncc_missing_threshold`.
pub fn match_feature_clusters(
    clusters: &[FeatureCluster],
    warped: &RasterImage,
    config: &DamageConfig,
) -> Result<(Vec<ClusterMatch>, usize)> {
    let gray = to_luma(warped);
    let (w, h) = (gray.width(), gray.height());
    let margin = (config.search_margin * ((w * w + h * h) as f64).sqrt()).round() as usize;
    let mut planner = FftPlanner::new();
    let mut matches = Vec::with_capacity(clusters.len());
    for c in clusters {
        let (ox, oy) = c.template_origin;
        let (tw, th) = (c.template.width(), c.template.height());
        let x0 = ox.saturating_sub(margin);
        let y0 = oy.saturating_sub(margin);
        let x1 = (ox + tw + margin).min(w);
        let y1 = (oy + th + margin).min(h);
        let window = gray.crop(x0, y0, x1 - x0, y1 - y0)?;
        let (score, (px, py)) = ncc_search_with(&mut planner, &c.template, &window)?;
        matches.push(ClusterMatch {
            cluster: c.id,
            score,
            peak: (x0 + px, y0 + py),
            missing: score < config.ncc_missing_threshold,
        });
    }
    let missing = matches.iter().filter(|m| m.missing).count();
    Ok((matches, missing))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize, seed: u32) -> RasterImage {
        RasterImage::from_gray_fn(w, h, |x, y| {
            let v = (x as u32 * 73 + y as u32 * 151 + seed).wrapping_mul(2654435761) >> 24;
            v as u8
        })
        .unwrap()
    }

    #[test]
    fn exact_copy_scores_one_at_its_offset() {
        let win = textured(60, 50, 1);
        let tmpl = win.crop(21, 13, 12, 9).unwrap();
        let (s, at) = ncc_search(&tmpl, &win).unwrap();
        assert!((s - 1.0).abs() < 1e-9);
        assert_eq!(at, (21, 13));
    }

    #[test]
    fn fft_path_agrees_with_direct() {
        let win = textured(200, 180, 7);
        let tmpl = win.crop(90, 40, 60, 55).unwrap();
        let (s, at) = ncc_search(&tmpl, &win).unwrap();
        assert!((s - 1.0).abs() < 1e-9, "{s}");
        assert_eq!(at, (90, 40));
    }

    #[test]
    fn negative_template_is_anticorrelated() {
        let tmpl = textured(16, 16, 3);
        let neg = tmpl.map_samples(|v| 255 - v);
        let (s, _) = ncc_search(&tmpl, &neg).unwrap();
        assert!((s + 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_window_scores_zero() {
        let tmpl = textured(8, 8, 3);
        let flat = RasterImage::filled(20, 20, &[255]).unwrap();
        assert_eq!(ncc_search(&tmpl, &flat).unwrap().0, 0.0);
    }

    #[test]
    fn oversized_template_uses_single_placement() {
        let tmpl = textured(30, 30, 5);
        let win = tmpl.crop(5, 5, 20, 20).unwrap();
        let (s, at) = ncc_search(&tmpl, &win).unwrap();
        assert!((s - 1.0).abs() < 1e-9);
        assert_eq!(at, (0, 0));
    }

    #[test]
    fn adaptive_threshold_finds_dark_ink() {
        let img = RasterImage::from_gray_fn(40, 40, |x, y| {
            if (18..22).contains(&x) && (10..30).contains(&y) {
                40
            } else {
                200
            }
        })
        .unwrap();
        let ink = adaptive_threshold(&img, 15, 10.0);
        assert!(ink.get(20, 20));
        assert!(!ink.get(5, 5));
        assert_eq!(ink.count(), 80);
    }
}
