//! Banknote condition analysis.
//!
//! `ucdi-core` registers a photographed note onto a clean reference template,
//! measures material loss, chromatic deviation, structural (edge/corner)
//! damage and missing printed motifs, and folds them into the Unified
//! Currency Damage Index, a usability score in `[0, 1]` where 1 is pristine.
//!
//! It also carries the dataset-curation tooling used to build training sets
//! of note photos: perceptual-hash deduplication, stratified splitting, the
//! enhancement chain and stochastic augmentation.
//!
//! Modules:
//! - [`raster`]: image and mask containers, colour conversions, morphology,
//!   connected components.
//! - [`enhance`]: median, sharpen, percentile stretch, CLAHE, bilateral.
//! - [`dataprep`]: pHash, deduplication, splitting, augmentation.
//! - [`align`]: scale-space keypoints, ratio-test matching, RANSAC homography, warping.
//! - [`damage`]: background removal and the damage metrics.
//! - [`ucdi`]: the final score.
//! - [`synth`]: synthetic note generator used by tests and benchmarks.

pub mod align;
pub mod damage;
pub mod dataprep;
pub mod enhance;
pub mod error;
pub mod io;
pub mod raster;
pub mod synth;
pub mod ucdi;

pub use error::{Error, Result};
