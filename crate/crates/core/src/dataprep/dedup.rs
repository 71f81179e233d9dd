//! Greedy per-class deduplication over perceptual hashes.
//!
//! Images are visited in sorted identifier order within each class. An image
//! is kept when no hash already kept for its class lies within the Hamming
//! threshold (inclusive); otherwise it is recorded as a duplicate of the first
//! kept image that matched. Which member of a near-duplicate pair survives
//! therefore depends on the visiting order, which is why the order is fixed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::phash::PerceptualHash;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupConfig {
    /// Maximum Hamming distance still considered a duplicate.
    pub threshold: u32,
    pub hash_bits: u32,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            threshold: 5,
            hash_bits: 64,
        }
    }
}

impl DedupConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hash_bits != 64 {
            return Err(Error::InvalidParameter(
                "dedup: only 64-bit hashes are supported".into(),
            ));
        }
        if self.threshold > self.hash_bits {
            return Err(Error::InvalidParameter(format!(
                "dedup: threshold {} exceeds hash_bits {}",
                self.threshold, self.hash_bits
            )));
        }
        Ok(())
    }
}

/// One image offered for deduplication. `hash` is `Err` when the file could not be hashed.
#[derive(Debug, Clone, PartialEq)]
pub struct HashedImage {
    pub id: String,
    pub class: String,
    pub hash: std::result::Result<PerceptualHash, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum DedupStatus {
    Retained,
    DuplicateOf {
        #[serde(rename = "duplicate_of")]
        original: String,
        distance: u32,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupDecision {
    pub id: String,
    pub class: String,
    pub hash: Option<PerceptualHash>,
    pub status: DedupStatus,
}

impl DedupDecision {
    pub fn is_retained(&self) -> bool {
        self.status == DedupStatus::Retained
    }
}

/// Retained hashes per class, each mapped to the identifier that was kept.
#[derive(Debug, Clone, Default)]
pub struct DedupIndex {
    threshold: u32,
    classes: BTreeMap<String, Vec<(PerceptualHash, String)>>,
}

impl DedupIndex {
    pub fn new(threshold: u32) -> Self {
        Self {
            threshold,
            classes: BTreeMap::new(),
        }
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    /// First stored hash of `class` within the threshold of `hash`, with its distance.
    pub fn find_similar(&self, class: &str, hash: PerceptualHash) -> Option<(&str, u32)> {
        self.classes.get(class)?.iter().find_map(|(h, id)| {
            let d = h.distance(hash);
            (d <= self.threshold).then_some((id.as_str(), d))
        })
    }

    pub fn insert(&mut self, class: &str, hash: PerceptualHash, id: String) {
        self.classes
            .entry(class.to_string())
            .or_default()
            .push((hash, id));
    }

    pub fn classes(&self) -> impl Iterator<Item = (&str, &[(PerceptualHash, String)])> {
        self.classes.iter().map(|(c, v)| (c.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.classes.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offers one image; returns its status and stores it when retained.
    pub fn offer(&mut self, image: &HashedImage) -> DedupStatus {
        match &image.hash {
            Err(reason) => DedupStatus::Skipped {
                reason: reason.clone(),
            },
            Ok(hash) => match self.find_similar(&image.class, *hash) {
                Some((original, distance)) => DedupStatus::DuplicateOf {
                    original: original.to_string(),
                    distance,
                },
                None => {
                    self.insert(&image.class, *hash, image.id.clone());
                    DedupStatus::Retained
                }
            },
        }
    }
}

fn sorted(images: &[HashedImage]) -> Vec<&HashedImage> {
    let mut order: Vec<&HashedImage> = images.iter().collect();
    order.sort_by(|a, b| a.class.cmp(&b.class).then_with(|| a.id.cmp(&b.id)));
    order
}

fn decision(image: &HashedImage, status: DedupStatus) -> DedupDecision {
    DedupDecision {
        id: image.id.clone(),
        class: image.class.clone(),
        hash: image.hash.as_ref().ok().copied(),
        status,
    }
}

/// Deduplicates one source. Decisions come back in class, then identifier order.
pub fn deduplicate(
    images: &[HashedImage],
    config: &DedupConfig,
) -> Result<(DedupIndex, Vec<DedupDecision>)> {
    config.validate()?;
    let mut index = DedupIndex::new(config.threshold);
    let decisions = sorted(images)
        .into_iter()
        .map(|img| {
            let status = index.offer(img);
            decision(img, status)
        })
        .collect();
    Ok((index, decisions))
}

/// Deduplicates each source on its own, then drops any image of a later
/// source that lies within the threshold of a hash retained (same class) by
/// an earlier source. Sources take precedence in slice order.
pub fn cross_dataset_dedup(
    sources: &[Vec<HashedImage>],
    config: &DedupConfig,
) -> Result<(DedupIndex, Vec<Vec<DedupDecision>>)> {
    config.validate()?;
    let mut global = DedupIndex::new(config.threshold);
    let mut out = Vec::with_capacity(sources.len());
    for source in sources {
        let (_, mut decisions) = deduplicate(source, config)?;
        for d in decisions.iter_mut().filter(|d| d.is_retained()) {
            let hash = d.hash.expect("retained images carry a hash");
            if let Some((original, distance)) = global.find_similar(&d.class, hash) {
                d.status = DedupStatus::DuplicateOf {
                    original: original.to_string(),
                    distance,
                };
            }
        }
        for d in decisions.iter().filter(|d| d.is_retained()) {
            global.insert(&d.class, d.hash.unwrap(), d.id.clone());
        }
        out.push(decisions);
    }
    Ok((global, out))
}
