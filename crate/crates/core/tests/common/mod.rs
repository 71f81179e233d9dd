//! Brute-force reference implementations shared by the oracle suites.
#![allow(dead_code)]

use rand::Rng;
use ucdi_core::align::{AlignConfig, DescriptorMatch, Keypoint, DESCRIPTOR_LEN};
use ucdi_core::damage::dbscan;
use ucdi_core::enhance::{bilateral_filter, median_blur, EnhanceConfig};
use ucdi_core::raster::{connected_components, BinaryMask, RasterImage};

pub const TRIALS: usize = 100;

pub fn random_image(rng: &mut impl Rng, channels: usize) -> RasterImage {
    let w = rng.gen_range(1..24);
    let h = rng.gen_range(1..24);
    // A few flat blocks so both smooth and busy windows occur.
    let flat = rng.gen_bool(0.5);
    let data = (0..w * h * channels)
        .map(|i| {
            if flat && (i / channels) % 7 < 4 {
                200
            } else {
                rng.gen()
            }
        })
        .collect();
    RasterImage::new(w, h, channels, data).unwrap()
}

fn clamped(img: &RasterImage, x: isize, y: isize, c: usize) -> u8 {
    let xc = x.max(0).min(img.width() as isize - 1) as usize;
    let yc = y.max(0).min(img.height() as isize - 1) as usize;
    img.data()[(yc * img.width() + xc) * img.channels() + c]
}

pub fn median_oracle(img: &RasterImage, k: usize) -> RasterImage {
    let r = (k / 2) as isize;
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            for c in 0..img.channels() {
                let mut v = Vec::new();
                for dy in -r..=r {
                    for dx in -r..=r {
                        v.push(clamped(img, x as isize + dx, y as isize + dy, c));
                    }
                }
                v.sort_unstable();
                out.pixel_mut(x, y)[c] = v[v.len() / 2];
            }
        }
    }
    out
}

pub fn bilateral_oracle(img: &RasterImage, cfg: &EnhanceConfig) -> RasterImage {
    let r = (cfg.bilateral_diameter / 2) as isize;
    let ch = img.channels();
    let mut out = img.clone();
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut acc = vec![0.0; ch];
            let mut norm = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy > r * r {
                        continue;
                    }
                    let mut c2 = 0.0;
                    for c in 0..ch {
                        let d =
                            clamped(img, x + dx, y + dy, c) as f64 - clamped(img, x, y, c) as f64;
                        c2 += d * d;
                    }
                    let s2 = (dx * dx + dy * dy) as f64;
                    let wgt = (-s2 / (2.0 * cfg.bilateral_sigma_space.powi(2))
                        - c2 / (2.0 * cfg.bilateral_sigma_color.powi(2)))
                    .exp();
                    for c in 0..ch {
                        acc[c] += wgt * clamped(img, x + dx, y + dy, c) as f64;
                    }
                    norm += wgt;
                }
            }
            for c in 0..ch {
                out.pixel_mut(x as usize, y as usize)[c] =
                    (acc[c] / norm).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    out
}

pub fn max_abs_diff(a: &RasterImage, b: &RasterImage) -> u8 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&p, &q)| p.abs_diff(q))
        .max()
        .unwrap_or(0)
}

pub fn random_points(rng: &mut impl Rng) -> Vec<(f64, f64)> {
    let n = rng.gen_range(0..120);
    let centres: Vec<(f64, f64)> = (0..rng.gen_range(1..5))
        .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
        .collect();
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.8) {
                let c = centres[rng.gen_range(0..centres.len())];
                (
                    c.0 + rng.gen_range(-0.05..0.05),
                    c.1 + rng.gen_range(-0.05..0.05),
                )
            } else {
                (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))
            }
        })
        .collect()
}

/// Textbook DBSCAN from the full distance matrix: clusters are the
/// connected components of the core graph, numbered by their lowest core
/// index; border points join the lowest-numbered adjacent cluster.
pub fn dbscan_oracle(points: &[(f64, f64)], eps: f64, min_samples: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let near = |i: usize, j: usize| {
        let (a, b) = (points[i], points[j]);
        (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2) <= eps * eps
    };
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_samples)
        .collect();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for i in 0..n {
        if !core[i] || labels[i].is_some() {
            continue;
        }
        let mut stack = vec![i];
        labels[i] = Some(next);
        while let Some(p) = stack.pop() {
            for q in 0..n {
                if core[q] && labels[q].is_none() && near(p, q) {
                    labels[q] = Some(next);
                    stack.push(q);
                }
            }
        }
        next += 1;
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = (0..n)
                .filter(|&j| core[j] && near(i, j))
                .filter_map(|j| labels[j])
                .min();
        }
    }
    labels
}

pub fn random_mask(rng: &mut impl Rng) -> BinaryMask {
    let w = rng.gen_range(1..40);
    let h = rng.gen_range(1..40);
    let p = rng.gen_range(0.1..0.7);
    BinaryMask::from_fn(w, h, |_, _| rng.gen_bool(p))
}

fn fill(mask: &BinaryMask, labels: &mut [u32], x: usize, y: usize, label: u32) -> usize {
    let w = mask.width();
    if !mask.get(x, y) || labels[y * w + x] != 0 {
        return 0;
    }
    labels[y * w + x] = label;
    let mut n = 1;
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < mask.height() {
                n += fill(mask, labels, nx as usize, ny as usize, label);
            }
        }
    }
    n
}

/// Recursive 8-connected flood fill in raster order; components smaller
/// than `min_area` are relabelled 0 and later labels shift down.
pub fn components_oracle(mask: &BinaryMask, min_area: usize) -> Vec<u32> {
    let (w, h) = (mask.width(), mask.height());
    let mut raw = vec![0u32; w * h];
    let mut areas = vec![0usize];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) && raw[y * w + x] == 0 {
                let label = areas.len() as u32;
                areas.push(fill(mask, &mut raw, x, y, label));
            }
        }
    }
    let mut remap = vec![0u32; areas.len()];
    let mut next = 1;
    for (l, &a) in areas.iter().enumerate().skip(1) {
        if a >= min_area {
            remap[l] = next;
            next += 1;
        }
    }
    raw.iter().map(|&l| remap[l as usize]).collect()
}

pub fn random_keypoints(rng: &mut impl Rng, n: usize) -> Vec<Keypoint> {
    (0..n)
        .map(|_| Keypoint {
            x: 0.0,
            y: 0.0,
            scale: 1.0,
            orientation: 0.0,
            response: 1.0,
            descriptor: (0..DESCRIPTOR_LEN)
                .map(|_| rng.gen_range(0.0..0.2))
                .collect(),
        })
        .collect()
}

/// Exhaustive matcher: full sorted distance lists in f64, ratio test on
/// distances, then the mutual check.
pub fn matcher_oracle(query: &[Keypoint], train: &[Keypoint], ratio: f64) -> Vec<(usize, usize)> {
    let d = |a: &Keypoint, b: &Keypoint| {
        a.descriptor
            .iter()
            .zip(&b.descriptor)
            .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let nearest_train = |i: usize| {
        let mut v: Vec<(f64, usize)> = train
            .iter()
            .enumerate()
            .map(|(j, t)| (d(&query[i], t), j))
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    let nearest_query = |j: usize| {
        (0..query.len())
            .min_by(|&a, &b| {
                d(&query[a], &train[j])
                    .partial_cmp(&d(&query[b], &train[j]))
                    .unwrap()
            })
            .unwrap()
    };
    let mut out = Vec::new();
    for i in 0..query.len() {
        let v = nearest_train(i);
        let second = v.get(1).map_or(f64::INFINITY, |p| p.0);
        if v[0].0 < ratio * second && nearest_query(v[0].1) == i {
            out.push((i, v[0].1));
        }
    }
    out
}

pub fn matcher_config() -> AlignConfig {
    AlignConfig {
        min_matches: 0,
        ..AlignConfig::default()
    }
}

pub fn pairs(m: &[DescriptorMatch]) -> Vec<(usize, usize)> {
    m.iter().map(|m| (m.query, m.train)).collect()
}

/// Runs each kernel against its oracle `TRIALS` times; returns a failure
/// description per kernel, or `None` when every trial agreed.
pub fn check_median(rng: &mut impl Rng) -> Option<String> {
    for t in 0..TRIALS {
        let img = random_image(rng, if t % 2 == 0 { 1 } else { 3 });
        let k = [3, 5, 7][t % 3];
        if median_blur(&img, k).unwrap() != median_oracle(&img, k) {
            return Some(format!("median trial {t} differs"));
        }
    }
    None
}

pub fn check_bilateral(rng: &mut impl Rng) -> Option<String> {
    for t in 0..TRIALS {
        let img = random_image(rng, if t % 2 == 0 { 1 } else { 3 });
        let cfg = EnhanceConfig {
            bilateral_diameter: [3, 5, 9][t % 3],
            bilateral_sigma_color: rng.gen_range(10.0..100.0),
            bilateral_sigma_space: rng.gen_range(1.0..80.0),
            ..EnhanceConfig::default()
        };
        let d = max_abs_diff(&bilateral_filter(&img, &cfg), &bilateral_oracle(&img, &cfg));
        if d > 1 {
            return Some(format!("bilateral trial {t} off by {d}"));
        }
    }
    None
}

pub fn check_dbscan(rng: &mut impl Rng) -> Option<String> {
    for t in 0..TRIALS {
        let pts = random_points(rng);
        let eps = rng.gen_range(0.01..0.1);
        let min = rng.gen_range(1..6);
        if dbscan(&pts, eps, min) != dbscan_oracle(&pts, eps, min) {
            return Some(format!("dbscan trial {t} differs"));
        }
    }
    None
}

pub fn check_components(rng: &mut impl Rng) -> Option<String> {
    for t in 0..TRIALS {
        let m = random_mask(rng);
        let min = rng.gen_range(1..6);
        if connected_components(&m, min).labels() != components_oracle(&m, min).as_slice() {
            return Some(format!("components trial {t} differs"));
        }
    }
    None
}

pub fn check_matcher(rng: &mut impl Rng) -> Option<String> {
    let cfg = matcher_config();
    let mut found = 0;
    for t in 0..TRIALS {
        let (nq, nt) = (rng.gen_range(1..40), rng.gen_range(1..40));
        let mut q = random_keypoints(rng, nq);
        let tr = random_keypoints(rng, nt);
        // Noisy copies of train descriptors give genuine matches.
        for k in q.iter_mut().take(nq / 2) {
            let src = &tr[rng.gen_range(0..nt)];
            k.descriptor = src
                .descriptor
                .iter()
                .map(|&v| v + rng.gen_range(-0.02..0.02))
                .collect();
        }
        let got = pairs(&ucdi_core::align::match_descriptors(&q, &tr, &cfg).unwrap());
        if got != matcher_oracle(&q, &tr, cfg.ratio_test) {
            return Some(format!("matcher trial {t} differs"));
        }
        found += got.len();
    }
    if found == 0 {
        return Some("matcher trials produced no matches".into());
    }
    None
}
