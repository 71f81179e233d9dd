//! Dataset curation: perceptual hashing, deduplication, stratified splits and augmentation.

mod augment;
mod dedup;
mod phash;
mod split;

pub use self::augment::{
    augment, color_jitter, erase, hflip, plan_crop, plan_erase, rotate, AugmentConfig, Rect,
    IMAGENET_MEAN, IMAGENET_STD,
};
pub use self::dedup::{
    cross_dataset_dedup, deduplicate, DedupConfig, DedupDecision, DedupIndex, DedupStatus,
    HashedImage,
};
pub use self::phash::{hamming, phash64, PerceptualHash};
pub use self::split::{largest_remainder, stratified_split, Split, SplitManifest};
