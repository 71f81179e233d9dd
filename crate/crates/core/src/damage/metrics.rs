use serde::{Deserialize, Serialize};

use super::DamageConfig;
use crate::enhance::{bilateral_filter, clahe, EnhanceConfig};
use crate::error::{Error, Result};
use crate::raster::{connected_components, BinaryMask, RasterImage, RegionMasks};

fn check_same_size(a: &BinaryMask, b: &BinaryMask) -> Result<()> {
    if !a.same_size(b) {
        return Err(Error::SizeMismatch(format!(
            "masks {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Percentage of reference material absent from the aligned damaged note,
/// with the mask of those pixels (`M_ref ∧ ¬M_damage`).
pub fn binary_damage(ref_mask: &BinaryMask, dmg_mask: &BinaryMask) -> Result<(f64, BinaryMask)> {
    check_same_size(ref_mask, dmg_mask)?;
    let total = ref_mask.count();
    if total == 0 {
        return Err(Error::EmptyMask("reference foreground"));
    }
    let lost = ref_mask.and_not(dmg_mask);
    Ok((100.0 * lost.count() as f64 / total as f64, lost))
}

/// CLAHE then bilateral, each according to its flag.
pub fn chromatic_preprocess(img: &RasterImage, config: &EnhanceConfig) -> Result<RasterImage> {
    let mut out = if config.clahe_enabled {
        clahe(img, config)?
    } else {
        img.clone()
    };
    if config.bilateral_enabled {
        out = bilateral_filter(&out, config);
    }
    Ok(out)
}

/// Mean absolute chromatic deviation over `mask`, as a percentage of 255,
/// and the per-pixel heatmap (mean over channels of `|warped − ref|`).
///
/// Both images are first passed through the CLAHE and bilateral stages
/// enabled in `config`.
pub fn rgb_damage(
    reference: &RasterImage,
    warped: &RasterImage,
    mask: &BinaryMask,
    config: &EnhanceConfig,
) -> Result<(f64, RasterImage)> {
    reference.require_channels(3)?;
    warped.require_channels(3)?;
    if !reference.same_shape(warped) || !mask.matches_image(reference) {
        return Err(Error::SizeMismatch(
            "rgb damage inputs differ in size".into(),
        ));
    }
    let n = mask.count();
    if n == 0 {
        return Err(Error::EmptyMask("valid pixels"));
    }
    let a = chromatic_preprocess(reference, config)?;
    let b = chromatic_preprocess(warped, config)?;
    let mut heat = Vec::with_capacity(mask.bits().len());
    let mut total = 0u64;
    for ((pa, pb), &m) in a
        .data()
        .chunks_exact(3)
        .zip(b.data().chunks_exact(3))
        .zip(mask.bits())
    {
        let d: u32 = pa
            .iter()
            .zip(pb)
            .map(|(&x, &y)| (x as i32 - y as i32).unsigned_abs())
            .sum();
        if m {
            total += d as u64;
        }
        heat.push(((d as f64) / 3.0).round() as u8);
    }
    let pct = 100.0 * total as f64 / (3.0 * 255.0 * n as f64);
    let heatmap = RasterImage::new(reference.width(), reference.height(), 1, heat)?;
    Ok((pct, heatmap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionOverlaps {
    /// Top, bottom, left, right.
    pub edges: [f64; 4],
    /// Top-left, top-right, bottom-left, bottom-right.
    pub corners: [f64; 4],
    pub damaged_edges: u32,
    pub damaged_corners: u32,
}

/// Fraction of each edge strip and corner square covered by damage. A
/// region counts as damaged when its overlap is strictly above the threshold.
pub fn structural_overlap(
    damage: &BinaryMask,
    regions: &RegionMasks,
    threshold: f64,
) -> Result<RegionOverlaps> {
    let overlap = |r: &BinaryMask| -> Result<f64> {
        check_same_size(damage, r)?;
        let area = r.count();
        if area == 0 {
            return Err(Error::EmptyMask("region"));
        }
        Ok(damage.count_and(r) as f64 / area as f64)
    };
    let mut edges = [0.0; 4];
    let mut corners = [0.0; 4];
    for i in 0..4 {
        edges[i] = overlap(&regions.edges[i])?;
        corners[i] = overlap(&regions.corners[i])?;
    }
    Ok(RegionOverlaps {
        damaged_edges: edges.iter().filter(|&&o| o > threshold).count() as u32,
        damaged_corners: corners.iter().filter(|&&o| o > threshold).count() as u32,
        edges,
        corners,
    })
}

/// Smallest component area kept by [`count_damage_regions`].
pub fn region_area_floor(reference_area: usize, config: &DamageConfig) -> usize {
    (config.region_min_area_fraction * reference_area as f64).ceil() as usize
}

/// Number of 8-connected damage components whose area reaches the floor
/// `region_min_area_fraction × reference_area`.
pub fn count_damage_regions(
    damage: &BinaryMask,
    reference_area: usize,
    config: &DamageConfig,
) -> usize {
    connected_components(damage, region_area_floor(reference_area, config)).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid(w: usize, h: usize) -> BinaryMask {
        BinaryMask::full(w, h)
    }

    #[test]
    fn binary_examples() {
        let r = solid(10, 10);
        assert_eq!(binary_damage(&r, &r).unwrap().0, 0.0);
        assert_eq!(
            binary_damage(&r, &BinaryMask::empty(10, 10)).unwrap().0,
            100.0
        );
        let cut = BinaryMask::from_fn(10, 10, |x, y| !(x < 5 && y < 5));
        let (pct, lost) = binary_damage(&r, &cut).unwrap();
        assert_eq!(pct, 25.0);
        assert_eq!(lost.count(), 25);
        // extra material in the damaged mask never offsets losses
        let r2 = BinaryMask::from_fn(10, 10, |x, _| x < 5);
        let d2 = BinaryMask::from_fn(10, 10, |x, y| x >= 1 || y > 100);
        assert_eq!(binary_damage(&r2, &d2).unwrap().0, 20.0);
        assert!(binary_damage(&BinaryMask::empty(4, 4), &r2).is_err());
    }

    #[test]
    fn rgb_examples() {
        let cfg = EnhanceConfig::disabled();
        let mask = BinaryMask::full(8, 8);
        let black = RasterImage::filled(8, 8, &[0, 0, 0]).unwrap();
        let white = RasterImage::filled(8, 8, &[255, 255, 255]).unwrap();
        assert_eq!(rgb_damage(&black, &black, &mask, &cfg).unwrap().0, 0.0);
        assert_eq!(rgb_damage(&black, &white, &mask, &cfg).unwrap().0, 100.0);
        let a = RasterImage::filled(8, 8, &[100, 150, 200]).unwrap();
        let b = RasterImage::filled(8, 8, &[49, 201, 149]).unwrap();
        let (pct, heat) = rgb_damage(&a, &b, &mask, &cfg).unwrap();
        assert!((pct - 20.0).abs() < 1e-12);
        assert_eq!(heat.sample(3, 3, 0), 51);
        assert!(rgb_damage(&a, &b, &BinaryMask::empty(8, 8), &cfg).is_err());
    }

    #[test]
    fn overlap_strictness() {
        let regions = RegionMasks::for_frame(100, 100, 0.1, 0.1).unwrap();
        let none = structural_overlap(&BinaryMask::empty(100, 100), &regions, 0.1).unwrap();
        assert_eq!((none.damaged_edges, none.damaged_corners), (0, 0));
        let all = structural_overlap(&BinaryMask::full(100, 100), &regions, 0.1).unwrap();
        assert_eq!((all.damaged_edges, all.damaged_corners), (4, 4));
        assert!(all.edges.iter().chain(&all.corners).all(|&o| o == 1.0));
        // top strip is 100×10; 100 damaged pixels = exactly 0.1
        let tenth = BinaryMask::from_fn(100, 100, |_, y| y == 0);
        let o = structural_overlap(&tenth, &regions, 0.1).unwrap();
        assert_eq!(o.edges[0], 0.1);
        assert_eq!(o.damaged_edges, 0);
        let more = BinaryMask::from_fn(100, 100, |x, y| y == 0 || (y == 1 && x == 50));
        assert_eq!(
            structural_overlap(&more, &regions, 0.1)
                .unwrap()
                .damaged_edges,
            1
        );
    }

    #[test]
    fn region_floor() {
        let cfg = DamageConfig::default();
        let m = BinaryMask::from_fn(100, 100, |x, y| {
            (x < 10 && y < 10) || (x > 50 && x < 60 && y > 50 && y < 60) || (x == 90 && y == 90)
        });
        // floor = ceil(0.0005 × 10000) = 5 px; the single pixel is dropped
        assert_eq!(count_damage_regions(&m, 10_000, &cfg), 2);
        assert_eq!(
            count_damage_regions(&BinaryMask::empty(10, 10), 100, &cfg),
            0
        );
    }
}
