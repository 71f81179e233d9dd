use serde::{Deserialize, Serialize};

use super::sift::Keypoint;
use super::AlignConfig;
use crate::error::{Error, Result};

/// Index pair into the two keypoint lists, with the descriptor distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorMatch {
    pub query: usize,
    pub train: usize,
    pub distance: f32,
}

#[inline]
fn dist2(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact nearest-neighbour matching with Lowe's ratio test and a mutual
/// (cross-check) filter.
///
/// A pair `(i, j)` survives when `j` is the nearest neighbour of `i`, the
/// nearest distance is below `ratio_test` times the second-nearest, and `i`
/// is in turn the nearest neighbour of `j`. The result is one-to-one and
/// sorted by query index.
pub fn match_descriptors(
    query: &[Keypoint],
    train: &[Keypoint],
    config: &AlignConfig,
) -> Result<Vec<DescriptorMatch>> {
    if query.is_empty() || train.is_empty() {
        return Err(Error::InsufficientMatches {
            found: 0,
            required: config.min_matches,
        });
    }
    let ratio2 = config.ratio_test * config.ratio_test;
    let mut train_best = vec![(f32::INFINITY, usize::MAX); train.len()];
    let mut query_best = Vec::with_capacity(query.len());
    for (i, q) in query.iter().enumerate() {
        let (mut d1, mut d2, mut j1) = (f32::INFINITY, f32::INFINITY, usize::MAX);
        for (j, t) in train.iter().enumerate() {
            let d = dist2(&q.descriptor, &t.descriptor);
            if d < d1 {
                d2 = d1;
                d1 = d;
                j1 = j;
            } else if d < d2 {
                d2 = d;
            }
            if d < train_best[j].0 {
                train_best[j] = (d, i);
            }
        }
        query_best.push((d1, d2, j1));
    }
    let matches: Vec<DescriptorMatch> = query_best
        .into_iter()
        .enumerate()
        .filter_map(|(i, (d1, d2, j))| {
            if j == usize::MAX || !(d1 < ratio2 as f32 * d2) || train_best[j].1 != i {
                return None;
            }
            Some(DescriptorMatch {
                query: i,
                train: j,
                distance: d1.sqrt(),
            })
        })
        .collect();
    if matches.len() < config.min_matches {
        return Err(Error::InsufficientMatches {
            found: matches.len(),
            required: config.min_matches,
        });
    }
    Ok(matches)
}
