//! Damage measurements of an aligned note pair and the end-to-end analysis.

mod background;
mod dbscan;
mod features;
mod metrics;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use background::remove_background;
pub use dbscan::dbscan;
pub use features::{
    adaptive_threshold, contour_points, extract_feature_clusters, match_feature_clusters,
    ncc_search, ClusterMatch, ClusterSummary, FeatureCluster,
};
pub use metrics::{
    binary_damage, chromatic_preprocess, count_damage_regions, region_area_floor, rgb_damage,
    structural_overlap, RegionOverlaps,
};

use crate::align::{register, warp_mask, warp_to_reference, AlignConfig, Homography};
use crate::enhance::EnhanceConfig;
use crate::error::{Error, Result};
use crate::raster::{open, BinaryMask, RasterImage, RegionMasks};
use crate::ucdi::{explain_ucdi, UcdiBreakdown, UcdiConfig, UcdiInputs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundConfig {
    /// τ: pixels with saturation strictly above this are foreground.
    pub saturation_threshold: u8,
    pub morph_radius: usize,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self {
            saturation_threshold: 30,
            morph_radius: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DamageConfig {
    /// DBSCAN radius as a fraction of the reference diagonal.
    pub dbscan_eps: f64,
    pub dbscan_min_samples: usize,
    pub ncc_missing_threshold: f64,
    pub overlap_threshold: f64,
    pub edge_strip_fraction: f64,
    pub corner_square_fraction: f64,
    /// Damage components smaller than this share of the reference area are ignored.
    pub region_min_area_fraction: f64,
    /// NCC search window growth around each cluster, fraction of the diagonal.
    pub search_margin: f64,
    pub adaptive_window: usize,
    pub adaptive_offset: f64,
    pub max_contour_points: usize,
    pub template_padding: usize,
    /// Opening radius applied to the damage mask before the structural and
    /// region counts; 0 disables it.
    pub damage_cleanup_radius: usize,
}

impl Default for DamageConfig {
    fn default() -> Self {
        Self {
            dbscan_eps: 0.02,
            dbscan_min_samples: 3,
            ncc_missing_threshold: 0.5,
            overlap_threshold: 0.1,
            edge_strip_fraction: 0.05,
            corner_square_fraction: 0.10,
            region_min_area_fraction: 0.0005,
            search_margin: 0.10,
            adaptive_window: 15,
            adaptive_offset: 10.0,
            max_contour_points: 5000,
            template_padding: 4,
            damage_cleanup_radius: 1,
        }
    }
}

impl DamageConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("damage: {m}")));
        let unit = |v: f64| v > 0.0 && v < 1.0;
        let frac = |v: f64| v > 0.0 && v < 0.5;
        if !unit(self.dbscan_eps)
            || !unit(self.ncc_missing_threshold)
            || !unit(self.overlap_threshold)
        {
            return bad(
                "dbscan_eps, ncc_missing_threshold and overlap_threshold must be in (0, 1)",
            );
        }
        if !unit(self.region_min_area_fraction) || !unit(self.search_margin) {
            return bad("region_min_area_fraction and search_margin must be in (0, 1)");
        }
        if !frac(self.edge_strip_fraction) || !frac(self.corner_square_fraction) {
            return bad("edge_strip_fraction and corner_square_fraction must be in (0, 0.5)");
        }
        if self.dbscan_min_samples == 0 {
            return bad("dbscan_min_samples must be >= 1");
        }
        if self.adaptive_window < 3 || self.adaptive_window % 2 == 0 {
            return bad("adaptive_window must be odd and >= 3");
        }
        if !self.adaptive_offset.is_finite() || self.max_contour_points == 0 {
            return bad("adaptive_offset must be finite and max_contour_points positive");
        }
        Ok(())
    }
}

/// Every knob of one analysis run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub background: BackgroundConfig,
    pub enhance: EnhanceConfig,
    pub align: AlignConfig,
    pub damage: DamageConfig,
    pub ucdi: UcdiConfig,
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.enhance.validate()?;
        self.align.validate()?;
        self.damage.validate()?;
        self.ucdi.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisStatus {
    Ok,
    Unalignable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationSummary {
    /// Damaged-photo coordinates to reference coordinates, row-major.
    pub homography: Homography,
    pub keypoints_reference: usize,
    pub keypoints_damaged: usize,
    pub matches: usize,
    pub inliers: usize,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageReport {
    pub status: AnalysisStatus,
    /// Why registration failed, for unalignable pairs.
    pub message: Option<String>,
    pub reference_area: usize,
    pub registration: Option<RegistrationSummary>,
    /// The seven score inputs B, R, E, C, F, N, Z.
    pub metrics: Option<UcdiInputs>,
    pub overlaps: Option<RegionOverlaps>,
    pub clusters: Vec<ClusterSummary>,
    pub matches: Vec<ClusterMatch>,
    pub ucdi: Option<f64>,
    pub breakdown: Option<UcdiBreakdown>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timings: Vec<StageTiming>,
}

/// Intermediate rasters kept for overlays.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub reference_mask: BinaryMask,
    /// Damaged note's foreground in the reference frame.
    pub damaged_mask: Option<BinaryMask>,
    pub warped: Option<RasterImage>,
    pub damage_mask: Option<BinaryMask>,
    pub heatmap: Option<RasterImage>,
    pub clusters: Vec<FeatureCluster>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: DamageReport,
    pub artifacts: Artifacts,
}

struct Timer(Vec<StageTiming>);

impl Timer {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage));
        self.0.push(StageTiming {
            stage: stage.to_string(),
            ms: t.elapsed().as_secs_f64() * 1e3,
        });
        out
    }
}

/// Full pipeline: background removal on both images, registration, warp,
/// binary and RGB damage, edge/corner overlap, motif matching, region count
/// and the score.
///
/// A pair that cannot be registered yields a report with status
/// `unalignable` and no score; any other failure is returned as an error
/// tagged with its stage.
pub fn analyze(
    reference: &RasterImage,
    damaged: &RasterImage,
    config: &AnalysisConfig,
) -> Result<Analysis> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let mut timer = Timer(Vec::new());
    let (ref_img, ref_mask) = timer.run("background", || {
        remove_background(reference, &config.background)
    })?;
    let (dmg_img, dmg_mask) = timer.run("background", || {
        remove_background(damaged, &config.background)
    })?;
    let reference_area = ref_mask.count();

    let reg = timer.run("align", || register(&ref_img, &dmg_img, &config.align));
    let reg = match reg {
        Ok(r) => r,
        Err(e) if e.is_alignment_failure() => {
            let message = match &e {
                Error::Stage { source, .. } => source.to_string(),
                other => other.to_string(),
            };
            return Ok(Analysis {
                report: DamageReport {
                    status: AnalysisStatus::Unalignable,
                    message: Some(message),
                    reference_area,
                    registration: None,
                    metrics: None,
                    overlaps: None,
                    clusters: Vec::new(),
                    matches: Vec::new(),
                    ucdi: None,
                    breakdown: None,
                    timings: timer.0,
                },
                artifacts: Artifacts {
                    reference_mask: ref_mask,
                    damaged_mask: None,
                    warped: None,
                    damage_mask: None,
                    heatmap: None,
                    clusters: Vec::new(),
                },
            });
        }
        Err(e) => return Err(e),
    };

    let (w, h) = (reference.width(), reference.height());
    let (warped, warped_mask) = timer.run("warp", || {
        Ok((
            warp_to_reference(&dmg_img, &reg.homography, w, h),
            warp_mask(&dmg_mask, &reg.homography, w, h),
        ))
    })?;
    let (binary, lost) = timer.run("binary_damage", || binary_damage(&ref_mask, &warped_mask))?;
    let (rgb, heatmap) = timer.run("rgb_damage", || {
        rgb_damage(
            &ref_img,
            &warped,
            &ref_mask.and(&warped_mask),
            &config.enhance,
        )
    })?;
    let cleaned = if config.damage.damage_cleanup_radius > 0 {
        open(&lost, config.damage.damage_cleanup_radius)
    } else {
        lost.clone()
    };
    let overlaps = timer.run("structural_overlap", || {
        let bbox = ref_mask
            .bounding_box()
            .ok_or(Error::EmptyMask("reference foreground"))?;
        let regions = RegionMasks::for_box(
            w,
            h,
            bbox,
            config.damage.edge_strip_fraction,
            config.damage.corner_square_fraction,
        )?;
        structural_overlap(&cleaned, &regions, config.damage.overlap_threshold)
    })?;
    let clusters = timer.run("features", || {
        extract_feature_clusters(&ref_img, &ref_mask, &config.damage)
    })?;
    let (matches, missing) = timer.run("feature_matching", || {
        match_feature_clusters(&clusters, &warped, &config.damage)
    })?;
    let regions = timer.run("regions", || {
        Ok(count_damage_regions(
            &cleaned,
            reference_area,
            &config.damage,
        ))
    })?;

    let metrics = UcdiInputs {
        binary,
        rgb,
        edges: overlaps.damaged_edges,
        corners: overlaps.damaged_corners,
        missing_features: missing,
        total_features: clusters.len(),
        regions,
    };
    let breakdown = timer.run("ucdi", || explain_ucdi(&metrics, &config.ucdi))?;
    Ok(Analysis {
        report: DamageReport {
            status: AnalysisStatus::Ok,
            message: None,
            reference_area,
            registration: Some(RegistrationSummary {
                homography: reg.homography,
                keypoints_reference: reg.keypoints_reference,
                keypoints_damaged: reg.keypoints_damaged,
                matches: reg.matches,
                inliers: reg.inliers,
                mean_error: reg.mean_error,
            }),
            metrics: Some(metrics),
            overlaps: Some(overlaps),
            clusters: clusters.iter().map(FeatureCluster::summary).collect(),
            matches,
            ucdi: Some(breakdown.score),
            breakdown: Some(breakdown),
            timings: timer.0,
        },
        artifacts: Artifacts {
            reference_mask: ref_mask,
            damaged_mask: Some(warped_mask),
            warped: Some(warped),
            damage_mask: Some(lost),
            heatmap: Some(heatmap),
            clusters,
        },
    })
}
