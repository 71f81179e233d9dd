//! Registration of a damaged-note photo onto its reference template.

mod homography;
mod matching;
mod sift;
mod warp;

use serde::{Deserialize, Serialize};

pub use homography::{estimate_homography, fit_dlt, Correspondence, Homography, HomographyFit};
pub use matching::{match_descriptors, DescriptorMatch};
pub use sift::{detect_keypoints, DetectorConfig, Keypoint, DESCRIPTOR_LEN};
pub use warp::{warp_mask, warp_to_reference};

use crate::error::{Error, Result};
use crate::raster::{to_luma, RasterImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignConfig {
    pub ratio_test: f64,
    /// Pixels, measured in the reference frame.
    pub ransac_reproj_threshold: f64,
    pub ransac_max_iters: usize,
    /// Early-exit confidence for the adaptive iteration count.
    pub ransac_confidence: f64,
    pub min_matches: usize,
    pub min_inliers: usize,
    /// Mixed into the data-derived RANSAC seed.
    pub seed: u64,
    pub detector: DetectorConfig,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            ratio_test: 0.75,
            ransac_reproj_threshold: 3.0,
            ransac_max_iters: 2000,
            ransac_confidence: 0.999,
            min_matches: 4,
            min_inliers: 10,
            seed: 0,
            detector: DetectorConfig::default(),
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("align: {msg}")));
        if !(self.ratio_test > 0.0 && self.ratio_test < 1.0) {
            return bad("ratio_test must be in (0, 1)");
        }
        if !(self.ransac_reproj_threshold > 0.0) {
            return bad("ransac_reproj_threshold must be positive");
        }
        if self.ransac_max_iters == 0 {
            return bad("ransac_max_iters must be positive");
        }
        if !(self.ransac_confidence > 0.0 && self.ransac_confidence < 1.0) {
            return bad("ransac_confidence must be in (0, 1)");
        }
        if self.min_matches < 4 {
            return bad("min_matches must be at least 4");
        }
        if self.min_inliers < 4 {
            return bad("min_inliers must be at least 4");
        }
        let d = &self.detector;
        if d.octave_layers == 0
            || !(d.sigma > 0.0)
            || !(d.contrast_threshold > 0.0)
            || !(d.edge_threshold > 1.0)
        {
            return bad("detector parameters out of range");
        }
        if d.max_keypoints == 0 {
            return bad("max_keypoints must be positive");
        }
        Ok(())
    }
}

/// Outcome of registering one image onto another.
#[derive(Debug, Clone)]
pub struct Registration {
    /// Maps damaged-image coordinates onto the reference frame.
    pub homography: Homography,
    pub keypoints_reference: usize,
    pub keypoints_damaged: usize,
    pub matches: usize,
    pub inliers: usize,
    pub mean_error: f64,
}

/// Detect, match and fit: the full keypoint registration of `damaged` onto `reference`.
pub fn register(
    reference: &RasterImage,
    damaged: &RasterImage,
    config: &AlignConfig,
) -> Result<Registration> {
    let ref_kp = detect_keypoints(&to_luma(reference), &config.detector)?;
    let dmg_kp = detect_keypoints(&to_luma(damaged), &config.detector)?;
    register_keypoints(&ref_kp, &dmg_kp, config)
}

/// Matching and robust fitting on precomputed keypoints.
pub fn register_keypoints(
    reference: &[Keypoint],
    damaged: &[Keypoint],
    config: &AlignConfig,
) -> Result<Registration> {
    let matches = match_descriptors(damaged, reference, config)?;
    let corr: Vec<Correspondence> = matches
        .iter()
        .map(|m| {
            let s = &damaged[m.query];
            let d = &reference[m.train];
            Correspondence {
                src: (s.x as f64, s.y as f64),
                dst: (d.x as f64, d.y as f64),
            }
        })
        .collect();
    let fit = estimate_homography(&corr, config)?;
    Ok(Registration {
        homography: fit.homography,
        keypoints_reference: reference.len(),
        keypoints_damaged: damaged.len(),
        matches: matches.len(),
        inliers: fit.inlier_count,
        mean_error: fit.mean_error,
    })
}
