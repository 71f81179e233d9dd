use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{resize_area, to_luma, RasterImage};

const SIDE: usize = 32;
const LOW: usize = 8;

/// 64-bit DCT perceptual hash. The least significant bit is always 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PerceptualHash(pub u64);

impl PerceptualHash {
    pub fn distance(self, other: PerceptualHash) -> u32 {
        hamming(self.0, other.0)
    }
}

impl fmt::Display for PerceptualHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for PerceptualHash {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        u64::from_str_radix(s, 16)
            .map(PerceptualHash)
            .map_err(|e| Error::InvalidParameter(format!("hash {s:?}: {e}")))
    }
}

impl From<PerceptualHash> for String {
    fn from(h: PerceptualHash) -> String {
        h.to_string()
    }
}

impl TryFrom<String> for PerceptualHash {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Number of differing bits.
#[inline]
pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}

fn dct_matrix() -> Vec<f64> {
    let n = SIDE as f64;
    let mut m = vec![0.0; SIDE * SIDE];
    for k in 0..SIDE {
        let scale = if k == 0 {
            (1.0 / n).sqrt()
        } else {
            (2.0 / n).sqrt()
        };
        for i in 0..SIDE {
            m[k * SIDE + i] = scale
                * (std::f64::consts::PI * (2.0 * i as f64 + 1.0) * k as f64 / (2.0 * n)).cos();
        }
    }
    m
}

/// Perceptual hash of any raster.
///
/// The image is reduced to luma, box-resized to 32×32 and transformed with a
/// 2-D DCT-II. The 8×8 low-frequency block minus its DC term gives 63
/// coefficients; each sets its bit when it exceeds their median.
pub fn phash64(img: &RasterImage) -> Result<PerceptualHash> {
    if img.pixel_count() == 0 {
        return Err(Error::DegenerateImage);
    }
    let small = resize_area(&to_luma(img), SIDE, SIDE);
    let dct = dct_matrix();
    // Only the first LOW rows/columns of the transform are needed.
    let mut rows = vec![0.0; SIDE * LOW];
    for y in 0..SIDE {
        for v in 0..LOW {
            rows[y * LOW + v] = (0..SIDE)
                .map(|x| dct[v * SIDE + x] * small[y * SIDE + x])
                .sum();
        }
    }
    let mut coeffs = Vec::with_capacity(LOW * LOW);
    for u in 0..LOW {
        for v in 0..LOW {
            coeffs.push(
                (0..SIDE)
                    .map(|y| dct[u * SIDE + y] * rows[y * LOW + v])
                    .sum::<f64>(),
            );
        }
    }
    let ac = &coeffs[1..];
    let mut sorted = ac.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut bits = 0u64;
    for (i, &c) in ac.iter().enumerate() {
        if c > median {
            bits |= 1 << (63 - i);
        }
    }
    Ok(PerceptualHash(bits))
}
