//! Projective transforms: normalised DLT and seeded RANSAC.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::AlignConfig;
use crate::error::{Error, Result};

/// 3×3 projective transform, stored row-major with `h[2][2] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

impl Serialize for Homography {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Homography {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 9]>::deserialize(d)?;
        Homography::from_row_major(v).map_err(serde::de::Error::custom)
    }
}

const MIN_DET: f64 = 1e-8;

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let scale = m[(2, 2)];
        if !scale.is_finite() || scale.abs() < 1e-12 {
            return Err(Error::InvalidParameter("homography h33 is zero".into()));
        }
        let m = m / scale;
        if m.iter().any(|v| !v.is_finite()) || m.determinant().abs() <= MIN_DET {
            return Err(Error::InvalidParameter("homography is singular".into()));
        }
        Ok(Self { m })
    }

    pub fn from_row_major(v: [f64; 9]) -> Result<Self> {
        Self::from_matrix(Matrix3::from_row_slice(&v))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = self.m[(r, c)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn inverse(&self) -> Homography {
        let inv = self
            .m
            .try_inverse()
            .expect("homography is invertible by construction");
        Homography::from_matrix(inv).expect("inverse of an invertible homography")
    }

    pub fn compose(&self, after: &Homography) -> Result<Homography> {
        Homography::from_matrix(after.m * self.m)
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let m = &self.m;
        let w = m[(2, 0)] * x + m[(2, 1)] * y + m[(2, 2)];
        if w.abs() < 1e-12 {
            return None;
        }
        Some((
            (m[(0, 0)] * x + m[(0, 1)] * y + m[(0, 2)]) / w,
            (m[(1, 0)] * x + m[(1, 1)] * y + m[(1, 2)]) / w,
        ))
    }

    /// Frobenius distance to another homography, both normalised so `h33 = 1`.
    pub fn frobenius_distance(&self, other: &Homography) -> f64 {
        (self.m - other.m).norm()
    }
}

/// Point pair: `src` in the damaged image, `dst` in the reference frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub src: (f64, f64),
    pub dst: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomographyFit {
    pub homography: Homography,
    /// Inlier flag per input correspondence, in input order.
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
    /// Mean forward reprojection error over the inliers, pixels.
    pub mean_error: f64,
    pub iterations: usize,
}

fn normalizer(points: &[(f64, f64)]) -> Option<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if mean_dist < 1e-12 {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Some(Matrix3::new(
        s,
        0.0,
        -s * cx,
        0.0,
        s,
        -s * cy,
        0.0,
        0.0,
        1.0,
    ))
}

fn transform(t: &Matrix3<f64>, p: (f64, f64)) -> (f64, f64) {
    let v = t * Vector3::new(p.0, p.1, 1.0);
    (v[0] / v[2], v[1] / v[2])
}

/// Least-squares homography from four or more correspondences (normalised DLT).
pub fn fit_dlt(corr: &[Correspondence]) -> Result<Homography> {
    if corr.len() < 4 {
        return Err(Error::InsufficientMatches {
            found: corr.len(),
            required: 4,
        });
    }
    let src: Vec<_> = corr.iter().map(|c| c.src).collect();
    let dst: Vec<_> = corr.iter().map(|c| c.dst).collect();
    let degenerate = || Error::InvalidParameter("degenerate point configuration".into());
    let ts = normalizer(&src).ok_or_else(degenerate)?;
    let td = normalizer(&dst).ok_or_else(degenerate)?;
    let rows = (2 * corr.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src.iter().zip(&dst).enumerate() {
        let (x, y) = transform(&ts, *s);
        let (u, v) = transform(&td, *d);
        let r0 = 2 * i;
        let r1 = r0 + 1;
        a[(r0, 0)] = -x;
        a[(r0, 1)] = -y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = u * x;
        a[(r0, 7)] = u * y;
        a[(r0, 8)] = u;
        a[(r1, 3)] = -x;
        a[(r1, 4)] = -y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = v * x;
        a[(r1, 7)] = v * y;
        a[(r1, 8)] = v;
    }
    // Null vector of A = eigenvector of AᵀA with the smallest eigenvalue.
    let ata = a.transpose() * &a;
    let eig = nalgebra::SymmetricEigen::new(ata);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nine eigenvalues");
    let h = eig.eigenvectors.column(imin);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td.try_inverse().ok_or_else(degenerate)?;
    Homography::from_matrix(td_inv * hn * ts).map_err(|_| degenerate())
}

#[inline]
fn reprojection_error2(h: &Homography, c: &Correspondence) -> f64 {
    match h.apply(c.src.0, c.src.1) {
        Some((x, y)) => (x - c.dst.0).powi(2) + (y - c.dst.1).powi(2),
        None => f64::INFINITY,
    }
}

fn collinear(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    cross.abs() < 1e-6 * (1.0 + (b.0 - a.0).abs() + (c.1 - a.1).abs()).powi(2)
}

fn sample_is_degenerate(sample: &[Correspondence; 4]) -> bool {
    for proj in [|c: &Correspondence| c.src, |c: &Correspondence| c.dst] {
        let p: Vec<_> = sample.iter().map(proj).collect();
        for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
            if collinear(p[i], p[j], p[k]) {
                return true;
            }
        }
    }
    false
}

/// Seed derived from the correspondence set, independent of list order.
fn seed_for(sorted: &[Correspondence], base: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    for c in sorted {
        for v in [c.src.0, c.src.1, c.dst.0, c.dst.1] {
            hasher.update(v.to_bits().to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"))
}

fn inlier_set(h: &Homography, corr: &[Correspondence], thr2: f64) -> Vec<bool> {
    corr.iter()
        .map(|c| reprojection_error2(h, c) < thr2)
        .collect()
}

/// Robust homography: 4-point RANSAC, then least-squares refits on the consensus set.
///
/// The correspondences are sorted before sampling and the RNG is seeded from
/// their contents, so any permutation of the same input produces the same fit.
pub fn estimate_homography(corr: &[Correspondence], config: &AlignConfig) -> Result<HomographyFit> {
    if corr.len() < 4 {
        return Err(Error::InsufficientMatches {
            found: corr.len(),
            required: 4,
        });
    }
    let mut order: Vec<usize> = (0..corr.len()).collect();
    let key = |c: &Correspondence| [c.src.0, c.src.1, c.dst.0, c.dst.1];
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(&corr[a]), key(&corr[b]));
        ka.iter()
            .zip(&kb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sorted: Vec<Correspondence> = order.iter().map(|&i| corr[i]).collect();
    let n = sorted.len();
    let thr2 = config.ransac_reproj_threshold * config.ransac_reproj_threshold;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(&sorted, config.seed));

    let mut best: Option<(usize, f64, Homography)> = None;
    let mut max_iters = config.ransac_max_iters;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut idx = [0usize; 4];
        for k in 0..4 {
            loop {
                let candidate = rng.gen_range(0..n);
                if !idx[..k].contains(&candidate) {
                    idx[k] = candidate;
                    break;
                }
            }
        }
        let sample = idx.map(|i| sorted[i]);
        if sample_is_degenerate(&sample) {
            continue;
        }
        let Ok(h) = fit_dlt(&sample) else { continue };
        let mut count = 0;
        let mut err = 0.0;
        for c in &sorted {
            let e = reprojection_error2(&h, c);
            if e < thr2 {
                count += 1;
                err += e;
            }
        }
        let better = match &best {
            None => count >= 4,
            Some((bc, be, _)) => count > *bc || (count == *bc && err < *be),
        };
        if better {
            best = Some((count, err, h));
            let w = count as f64 / n as f64;
            let denom = (1.0 - w.powi(4)).ln();
            if denom < 0.0 {
                let needed = ((1.0 - config.ransac_confidence).ln() / denom).ceil();
                if needed.is_finite() && needed >= 0.0 {
                    max_iters = max_iters.min((needed as usize).max(1));
                }
            }
        }
    }
    let Some((count, _, mut h)) = best else {
        return Err(Error::AlignmentFailed {
            inliers: 0,
            required: config.min_inliers,
        });
    };
    let mut mask = inlier_set(&h, &sorted, thr2);
    let mut inlier_count = count;
    for _ in 0..5 {
        let subset: Vec<Correspondence> = sorted
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(c, _)| *c)
            .collect();
        let Ok(refit) = fit_dlt(&subset) else { break };
        let refit_mask = inlier_set(&refit, &sorted, thr2);
        let refit_count = refit_mask.iter().filter(|&&m| m).count();
        if refit_count < inlier_count {
            break;
        }
        let changed = refit_mask != mask;
        h = refit;
        mask = refit_mask;
        inlier_count = refit_count;
        if !changed {
            break;
        }
    }
    if inlier_count < config.min_inliers {
        return Err(Error::AlignmentFailed {
            inliers: inlier_count,
            required: config.min_inliers,
        });
    }
    let mean_error = sorted
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(c, _)| reprojection_error2(&h, c).sqrt())
        .sum::<f64>()
        / inlier_count as f64;
    let mut inliers = vec![false; n];
    for (pos, &orig) in order.iter().enumerate() {
        inliers[orig] = mask[pos];
    }
    Ok(HomographyFit {
        homography: h,
        inliers,
        inlier_count,
        mean_error,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: &Homography) -> Vec<Correspondence> {
        let mut out = Vec::new();
        for i in 0..6 {
            for j in 0..5 {
                let src = (
                    10.0 + 37.0 * i as f64,
                    5.0 + 41.0 * j as f64 + (i * j) as f64,
                );
                let dst = h.apply(src.0, src.1).unwrap();
                out.push(Correspondence { src, dst });
            }
        }
        out
    }

    #[test]
    fn identity_recovered() {
        let corr = grid(&Homography::identity());
        let fit = estimate_homography(&corr, &AlignConfig::default()).unwrap();
        assert!(fit.homography.frobenius_distance(&Homography::identity()) < 1e-6);
        assert_eq!(fit.inlier_count, corr.len());
    }

    #[test]
    fn exact_projective_recovered_by_dlt() {
        let h = Homography::from_row_major([1.1, 0.05, 4.0, -0.03, 0.95, -7.0, 2e-4, -1e-4, 1.0])
            .unwrap();
        let fit = fit_dlt(&grid(&h)).unwrap();
        assert!(fit.frobenius_distance(&h) < 1e-8);
    }

    #[test]
    fn too_few_correspondences() {
        let corr = grid(&Homography::identity());
        assert!(estimate_homography(&corr[..3], &AlignConfig::default()).is_err());
    }

    #[test]
    fn singular_rejected_and_serde_round_trip() {
        assert!(Homography::from_row_major([1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]).is_err());
        let h = Homography::from_row_major([1.0, 0.1, 3.0, 0.0, 1.0, -2.0, 0.0, 0.0, 1.0]).unwrap();
        let json = serde_json::to_string(&h).unwrap();
        let back: Homography = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
        let inv = h.inverse();
        let (x, y) = inv
            .apply(h.apply(5.0, 7.0).unwrap().0, h.apply(5.0, 7.0).unwrap().1)
            .unwrap();
        assert!((x - 5.0).abs() < 1e-12 && (y - 7.0).abs() < 1e-12);
    }
}
