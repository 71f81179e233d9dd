use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub assignments: BTreeMap<String, Split>,
    pub ratios: [f64; 3],
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl SplitManifest {
    pub fn count(&self, split: Split) -> usize {
        self.assignments.values().filter(|&&s| s == split).count()
    }
}

/// Largest-remainder allocation of `n` items over `ratios`.
///
/// Floors are assigned first; the leftover items go to the largest fractional
/// parts, ties broken towards the earlier split.
pub fn largest_remainder(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    // Round away float noise such as 7 · 0.1 = 0.7000000000000001 before flooring.
    let quotas = quotas.map(|q| (q * 1e9).round() / 1e9);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn class_seed(seed: u64, class: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(class.as_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn validate_ratios(ratios: [f64; 3]) -> Result<()> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r))
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-6
    {
        return Err(Error::InvalidParameter(format!(
            "split ratios {ratios:?} must be in [0, 1] and sum to 1"
        )));
    }
    Ok(())
}

/// Per-class shuffled, largest-remainder split of `(id, class)` pairs.
///
/// Classes with fewer than three images go entirely to train and are noted
/// in the manifest warnings. The result depends only on the set of inputs
/// and the seed, not on their order.
pub fn stratified_split(
    items: &[(String, String)],
    ratios: [f64; 3],
    seed: u64,
) -> Result<SplitManifest> {
    validate_ratios(ratios)?;
    let mut by_class: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, class) in items {
        by_class
            .entry(class.as_str())
            .or_default()
            .push(id.as_str());
    }
    let mut assignments = BTreeMap::new();
    let mut warnings = Vec::new();
    for (class, mut ids) in by_class {
        ids.sort_unstable();
        ids.dedup();
        if ids.len() < 3 {
            warnings.push(format!(
                "class {class:?} has {} image(s); all assigned to train",
                ids.len()
            ));
            for id in ids {
                assignments.insert(id.to_string(), Split::Train);
            }
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(class_seed(seed, class));
        ids.shuffle(&mut rng);
        let counts = largest_remainder(ids.len(), ratios);
        let mut rest = ids.as_slice();
        for (split, n) in Split::ALL.into_iter().zip(counts) {
            let (take, tail) = rest.split_at(n);
            for id in take {
                assignments.insert(id.to_string(), split);
            }
            rest = tail;
        }
    }
    Ok(SplitManifest {
        assignments,
        ratios,
        seed,
        warnings,
    })
}
