//! Diagnostic images: damage mask, chromatic heatmap and motif matches.

use std::path::Path;

use anyhow::Result;
use ucdi_core::damage::{Analysis, ClusterMatch, FeatureCluster};
use ucdi_core::io::{save, save_mask_png};
use ucdi_core::raster::RasterImage;

/// Blue → cyan → yellow → red ramp over `t ∈ [0, 1]`.
fn ramp(t: f64) -> [u8; 3] {
    let stops = [[0.0, 0.0, 128.0], [0.0, 200.0, 255.0], [255.0, 230.0, 0.0], [220.0, 0.0, 0.0]];
    let x = t.clamp(0.0, 1.0) * 3.0;
    let i = (x.floor() as usize).min(2);
    let f = x - i as f64;
    let (a, b) = (stops[i], stops[i + 1]);
    [0, 1, 2].map(|c| (a[c] + (b[c] - a[c]) * f).round() as u8)
}

/// Colour-maps a gray difference image, scaled to its own maximum.
pub fn colorize(heat: &RasterImage) -> RasterImage {
    let peak = heat.data().iter().copied().max().unwrap_or(0).max(1) as f64;
    RasterImage::from_rgb_fn(heat.width(), heat.height(), |x, y| ramp(heat.sample(x, y, 0) as f64 / peak))
        .expect("same size as the heatmap")
}

fn put(img: &mut RasterImage, x: i64, y: i64, colour: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
        img.pixel_mut(x as usize, y as usize).copy_from_slice(&colour);
    }
}

/// Found motifs get a green box at their best match; missing ones a red
/// box with a cross at their reference position.
pub fn annotate(base: &RasterImage, clusters: &[FeatureCluster], matches: &[ClusterMatch]) -> RasterImage {
    let mut img = if base.channels() == 3 {
        base.clone()
    } else {
        RasterImage::from_rgb_fn(base.width(), base.height(), |x, y| [base.sample(x, y, 0); 3]).unwrap()
    };
    for m in matches {
        let Some(c) = clusters.iter().find(|c| c.id == m.cluster) else { continue };
        let (w, h) = (c.template.width() as i64, c.template.height() as i64);
        let (x0, y0) = if m.missing {
            (c.template_origin.0 as i64, c.template_origin.1 as i64)
        } else {
            (m.peak.0 as i64, m.peak.1 as i64)
        };
        let colour = if m.missing { [230, 0, 0] } else { [0, 180, 0] };
        for t in 0..2 {
            for x in x0..x0 + w {
                put(&mut img, x, y0 + t, colour);
                put(&mut img, x, y0 + h - 1 - t, colour);
            }
            for y in y0..y0 + h {
                put(&mut img, x0 + t, y, colour);
                put(&mut img, x0 + w - 1 - t, y, colour);
            }
        }
        if m.missing {
            let n = w.max(h);
            for k in 0..n {
                let (dx, dy) = (k * w / n, k * h / n);
                put(&mut img, x0 + dx, y0 + dy, colour);
                put(&mut img, x0 + w - 1 - dx, y0 + dy, colour);
            }
        }
    }
    img
}

/// Writes whichever overlays the analysis produced; returns their paths.
pub fn write_overlays(analysis: &Analysis, reference: &RasterImage, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let a = &analysis.artifacts;
    let mut written = Vec::new();
    if let Some(mask) = &a.damage_mask {
        let p = dir.join("damage_mask.png");
        save_mask_png(mask, &p)?;
        written.push(p.display().to_string());
    }
    if let Some(heat) = &a.heatmap {
        let p = dir.join("rgb_heatmap.png");
        save(&colorize(heat), &p)?;
        written.push(p.display().to_string());
    }
    if !a.clusters.is_empty() {
        let base = a.warped.as_ref().unwrap_or(reference);
        let p = dir.join("cluster_matches.png");
        save(&annotate(base, &a.clusters, &analysis.report.matches), &p)?;
        written.push(p.display().to_string());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), [0, 0, 128]);
        assert_eq!(ramp(1.0), [220, 0, 0]);
    }

    #[test]
    fn colorize_keeps_size() {
        let heat = RasterImage::from_gray_fn(5, 3, |x, _| (x * 40) as u8).unwrap();
        let c = colorize(&heat);
        assert_eq!((c.width(), c.height(), c.channels()), (5, 3, 3));
        assert_eq!(c.pixel(4, 0), &[220, 0, 0]);
    }
}
