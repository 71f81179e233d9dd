use crate::error::{Error, Result};

/// Nearest-rank percentile: the `ceil(p/100 · n)`-th smallest value.
///
/// `p` is clamped to 0–100; `p = 0` yields the minimum.
pub fn percentile<T: Copy + PartialOrd>(values: &[T], p: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sorted[nearest_rank(sorted.len(), p) - 1])
}

/// One-based nearest rank in a sample of size `n`.
pub(crate) fn nearest_rank(n: usize, p: f64) -> usize {
    let p = p.clamp(0.0, 100.0);
    // Guard against 0.98·100 style float noise pushing the rank up by one.
    let rank = (p / 100.0 * n as f64 - 1e-9).ceil() as usize;
    rank.clamp(1, n)
}

/// Nearest-rank percentile from a 256-bin histogram.
pub(crate) fn percentile_from_histogram(hist: &[u64; 256], p: f64) -> Option<u8> {
    let n: u64 = hist.iter().sum();
    if n == 0 {
        return None;
    }
    let rank = nearest_rank(n as usize, p) as u64;
    let mut acc = 0u64;
    for (v, &c) in hist.iter().enumerate() {
        acc += c;
        if acc >= rank {
            return Some(v as u8);
        }
    }
    Some(255)
}
