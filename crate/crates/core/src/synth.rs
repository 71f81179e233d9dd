//! Synthetic notes, damage and camera warps with known ground truth.
//!
//! A generated note is a saturated, smoothly shaded rectangle covered in
//! sharp-edged motifs, sitting on a white sheet. Cuts remove material with a
//! precisely known pixel count, and warps are drawn from a bounded family of
//! projective transforms.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::Homography;
use crate::raster::{clamp_u8, hsv_to_rgb_f, BinaryMask, RasterImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteSpec {
    pub width: usize,
    pub height: usize,
    /// White border on each side, as a fraction of the matching dimension.
    pub margin: f64,
    pub motifs: usize,
    pub seed: u64,
}

impl NoteSpec {
    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            margin: 0.08,
            motifs: 40,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticNote {
    pub image: RasterImage,
    /// Exact note footprint.
    pub foreground: BinaryMask,
    /// Inclusive pixel box of the note body `(x0, y0, x1, y1)`.
    pub body: (usize, usize, usize, usize),
}

#[derive(Clone, Copy)]
enum Shape {
    Disc { r: f64 },
    Ring { r: f64, inner: f64 },
    Rect { hw: f64, hh: f64 },
    Triangle { r: f64 },
    Cross { r: f64, arm: f64 },
    Star { r: f64 },
}

struct Motif {
    cx: f64,
    cy: f64,
    angle: f64,
    shape: Shape,
    color: [f64; 3],
}

impl Motif {
    fn extent(&self) -> f64 {
        match self.shape {
            Shape::Disc { r }
            | Shape::Ring { r, .. }
            | Shape::Triangle { r }
            | Shape::Cross { r, .. }
            | Shape::Star { r } => r,
            Shape::Rect { hw, hh } => (hw * hw + hh * hh).sqrt(),
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (s, c) = self.angle.sin_cos();
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        match self.shape {
            Shape::Disc { r } => u * u + v * v <= r * r,
            Shape::Ring { r, inner } => {
                let d2 = u * u + v * v;
                d2 <= r * r && d2 >= inner * inner
            }
            Shape::Rect { hw, hh } => u.abs() <= hw && v.abs() <= hh,
            Shape::Triangle { r } => {
                // equilateral, circumradius r, apex along +v
                let k = r * 0.5;
                v >= -k && (3f64.sqrt() * u.abs() + v) <= r
            }
            Shape::Cross { r, arm } => {
                (u.abs() <= r && v.abs() <= arm) || (v.abs() <= r && u.abs() <= arm)
            }
            Shape::Star { r } => {
                let rho = (u * u + v * v).sqrt();
                let phi = v.atan2(u);
                rho <= r * (0.55 + 0.45 * (5.0 * phi).cos().abs().powf(0.6))
            }
        }
    }
}

fn random_color(rng: &mut ChaCha8Rng, v_range: (f64, f64)) -> [f64; 3] {
    let h = rng.gen_range(0.0..360.0);
    let s = rng.gen_range(0.6..1.0);
    let v = rng.gen_range(v_range.0..v_range.1);
    hsv_to_rgb_f(h, s, v).map(|c| c * 255.0)
}

fn random_motif(rng: &mut ChaCha8Rng, body: (f64, f64, f64, f64), unit: f64, small: bool) -> Motif {
    let r = if small {
        rng.gen_range(0.012..0.03) * unit
    } else {
        rng.gen_range(0.035..0.09) * unit
    };
    let pad = 0.4 * r;
    let cx = rng.gen_range(body.0 + pad..body.2 - pad);
    let cy = rng.gen_range(body.1 + pad..body.3 - pad);
    let shape = match rng.gen_range(0..6) {
        0 => Shape::Disc { r },
        1 => Shape::Ring {
            r,
            inner: r * rng.gen_range(0.35..0.7),
        },
        2 => Shape::Rect {
            hw: r,
            hh: r * rng.gen_range(0.3..1.0),
        },
        3 => Shape::Triangle { r },
        4 => Shape::Cross {
            r,
            arm: r * rng.gen_range(0.2..0.4),
        },
        _ => Shape::Star { r },
    };
    Motif {
        cx,
        cy,
        angle: rng.gen_range(0.0..2.0 * PI),
        shape,
        color: random_color(rng, (0.2, 0.95)),
    }
}

/// Renders a synthetic note on a white sheet.
pub fn generate_note(spec: &NoteSpec) -> SyntheticNote {
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mx = ((w as f64 * spec.margin).round() as usize).min(w / 2 - 1);
    let my = ((h as f64 * spec.margin).round() as usize).min(h / 2 - 1);
    let body = (mx, my, w - 1 - mx, h - 1 - my);
    let bodyf = (
        body.0 as f64,
        body.1 as f64,
        body.2 as f64 + 1.0,
        body.3 as f64 + 1.0,
    );
    let unit = (bodyf.2 - bodyf.0).min(bodyf.3 - bodyf.1);

    let base_hue = rng.gen_range(0.0..360.0);
    let (fx, fy) = (rng.gen_range(1.0..3.0), rng.gen_range(1.0..3.0));
    let (px, py) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
    let small = spec.motifs * 3 / 2;
    let motifs: Vec<Motif> = (0..spec.motifs + small)
        .map(|i| random_motif(&mut rng, bodyf, unit, i >= spec.motifs))
        .collect();

    let mut data = vec![255u8; w * h * 3];
    let mut fg = BinaryMask::empty(w, h);
    let bw = bodyf.2 - bodyf.0;
    let bh = bodyf.3 - bodyf.1;
    for y in body.1..=body.3 {
        for x in body.0..=body.2 {
            let u = (x as f64 - bodyf.0) / bw;
            let v = (y as f64 - bodyf.1) / bh;
            let hue = base_hue
                + 35.0 * (2.0 * PI * fx * u + px).sin()
                + 25.0 * (2.0 * PI * fy * v + py).cos();
            let sat = 0.5 + 0.15 * (2.0 * PI * (u + v) + px).sin();
            let val = 0.8 + 0.1 * (2.0 * PI * (u - v) * 1.5 + py).cos();
            let rgb = hsv_to_rgb_f(hue, sat, val);
            let i = (y * w + x) * 3;
            for c in 0..3 {
                data[i + c] = clamp_u8(rgb[c] * 255.0);
            }
            fg.set(x, y, true);
        }
    }
    // 3×3 supersampling gives clean subpixel edges.
    const SS: [f64; 3] = [-1.0 / 3.0, 0.0, 1.0 / 3.0];
    for m in &motifs {
        let e = m.extent().ceil() as isize + 1;
        let x0 = (m.cx as isize - e).max(body.0 as isize) as usize;
        let x1 = (m.cx as isize + e).min(body.2 as isize) as usize;
        let y0 = (m.cy as isize - e).max(body.1 as isize) as usize;
        let y1 = (m.cy as isize + e).min(body.3 as isize) as usize;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let mut hits = 0;
                for dy in SS {
                    for dx in SS {
                        if m.contains(x as f64 + dx, y as f64 + dy) {
                            hits += 1;
                        }
                    }
                }
                if hits == 0 {
                    continue;
                }
                let a = hits as f64 / 9.0;
                let i = (y * w + x) * 3;
                for c in 0..3 {
                    data[i + c] = clamp_u8(a * m.color[c] + (1.0 - a) * data[i + c] as f64);
                }
            }
        }
    }
    // Antialiased edges between complementary colours can blend to gray;
    // push those back out so every note pixel is clearly saturated.
    for (px, &on) in data.chunks_exact_mut(3).zip(fg.bits()) {
        if on {
            keep_saturated(px, 0.3);
        }
    }
    SyntheticNote {
        image: RasterImage::new(w, h, 3, data).expect("buffer sized from spec"),
        foreground: fg,
        body,
    }
}

fn keep_saturated(px: &mut [u8], min_sat: f64) {
    let max = *px.iter().max().expect("three channels") as f64;
    let min = *px.iter().min().expect("three channels") as f64;
    if max < 8.0 || (max - min) >= min_sat * max {
        return;
    }
    if max == min {
        px[0] = max as u8;
        px[1] = clamp_u8(max * (1.0 - min_sat));
        px[2] = px[1];
        return;
    }
    let k = min_sat * max / (max - min);
    for v in px.iter_mut() {
        *v = clamp_u8(max - (max - *v as f64) * k);
    }
}

/// The textured 640×480 registration fixture.
pub fn registration_fixture(seed: u64) -> SyntheticNote {
    generate_note(&NoteSpec::new(640, 480, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutKind {
    Corner,
    Edge,
    Hole,
}

#[derive(Debug, Clone)]
pub struct CutNote {
    pub image: RasterImage,
    /// Remaining material after the cut.
    pub foreground: BinaryMask,
    pub removed: BinaryMask,
    pub kind: CutKind,
    /// Removed share of the original foreground, percent. This is the ground truth B.
    pub removed_pct: f64,
}

struct CutGeometry {
    kind: CutKind,
    corner: usize,
    edge: usize,
    skew: f64,
    aspect: f64,
    cx: f64,
    cy: f64,
    wobble_amp: f64,
    wobble_freq: f64,
    wobble_phase: f64,
}

impl CutGeometry {
    /// Whether body-relative point `(u, v)` in `[0,1]²` is removed at size `t`.
    fn removes(&self, u: f64, v: f64, t: f64, bw: f64, bh: f64) -> bool {
        let wob =
            |s: f64| self.wobble_amp * (2.0 * PI * self.wobble_freq * s + self.wobble_phase).sin();
        match self.kind {
            CutKind::Corner => {
                let (a, b) = match self.corner {
                    0 => (u, v),
                    1 => (1.0 - u, v),
                    2 => (u, 1.0 - v),
                    _ => (1.0 - u, 1.0 - v),
                };
                let la = t * self.aspect;
                let lb = t / self.aspect;
                a / la + b / lb + wob(a - b) < 1.0
            }
            CutKind::Edge => {
                let (d, s) = match self.edge {
                    0 => (v, u),
                    1 => (1.0 - v, u),
                    2 => (u, v),
                    _ => (1.0 - u, v),
                };
                d < t * (1.0 + self.skew * (s - 0.5)) + wob(s) * t.min(0.1)
            }
            CutKind::Hole => {
                let (dx, dy) = ((u - self.cx) * bw, (v - self.cy) * bh);
                let rho = (dx * dx + dy * dy).sqrt() / bw.min(bh);
                let phi = dy.atan2(dx);
                rho < t * (1.0 + 0.12 * (5.0 * phi + self.wobble_phase).sin())
            }
        }
    }
}

/// Cuts roughly `target_pct` percent of the note's material away, replacing
/// it with white. The exact removed share is returned as ground truth.
pub fn cut_note(
    note: &SyntheticNote,
    target_pct: f64,
    kind: CutKind,
    rng: &mut impl Rng,
) -> CutNote {
    let (x0, y0, x1, y1) = note.body;
    let bw = (x1 - x0 + 1) as f64;
    let bh = (y1 - y0 + 1) as f64;
    let geom = CutGeometry {
        kind,
        corner: rng.gen_range(0..4),
        edge: rng.gen_range(0..4),
        skew: rng.gen_range(-0.6..0.6),
        aspect: rng.gen_range(0.7..1.4),
        cx: rng.gen_range(0.35..0.65),
        cy: rng.gen_range(0.35..0.65),
        wobble_amp: rng.gen_range(0.0..0.03),
        wobble_freq: rng.gen_range(1.0..4.0),
        wobble_phase: rng.gen_range(0.0..2.0 * PI),
    };
    let total = note.foreground.count();
    let target = (target_pct / 100.0 * total as f64).round() as usize;
    let removed_at = |t: f64| {
        let w = note.foreground.width();
        BinaryMask::from_fn(w, note.foreground.height(), |x, y| {
            note.foreground.get(x, y)
                && geom.removes(
                    (x as f64 + 0.5 - x0 as f64) / bw,
                    (y as f64 + 0.5 - y0 as f64) / bh,
                    t,
                    bw,
                    bh,
                )
        })
    };
    let (mut lo, mut hi) = (0.0, 2.5);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if removed_at(mid).count() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let removed = removed_at(hi);
    let mut image = note.image.clone();
    for y in 0..image.height() {
        for x in 0..image.width() {
            if removed.get(x, y) {
                image.pixel_mut(x, y).copy_from_slice(&[255, 255, 255]);
            }
        }
    }
    let foreground = note.foreground.and_not(&removed);
    CutNote {
        image,
        removed_pct: 100.0 * removed.count() as f64 / total as f64,
        foreground,
        removed,
        kind,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarpRange {
    pub max_rotation_deg: f64,
    pub scale: (f64, f64),
    /// Fraction of the image dimension.
    pub max_translation: f64,
    /// Largest relative change of the projective denominator at a corner.
    pub max_perspective: f64,
}

impl Default for WarpRange {
    fn default() -> Self {
        Self {
            max_rotation_deg: 20.0,
            scale: (0.8, 1.2),
            max_translation: 0.15,
            max_perspective: 0.05,
        }
    }
}

/// Random projective transform about the image centre, drawn from `range`.
pub fn random_homography(
    width: usize,
    height: usize,
    range: &WarpRange,
    rng: &mut impl Rng,
) -> Homography {
    let (w, h) = (width as f64, height as f64);
    let (cx, cy) = (w / 2.0, h / 2.0);
    let theta = rng
        .gen_range(-range.max_rotation_deg..=range.max_rotation_deg)
        .to_radians();
    let s = rng.gen_range(range.scale.0..=range.scale.1);
    let tx = rng.gen_range(-range.max_translation..=range.max_translation) * w;
    let ty = rng.gen_range(-range.max_translation..=range.max_translation) * h;
    let p1 = rng.gen_range(-range.max_perspective..=range.max_perspective) / cx;
    let p2 = rng.gen_range(-range.max_perspective..=range.max_perspective) / cy;
    let (sn, cs) = theta.sin_cos();
    use nalgebra::Matrix3;
    let to_origin = Matrix3::new(1.0, 0.0, -cx, 0.0, 1.0, -cy, 0.0, 0.0, 1.0);
    let persp = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, p1, p2, 1.0);
    let rs = Matrix3::new(s * cs, -s * sn, 0.0, s * sn, s * cs, 0.0, 0.0, 0.0, 1.0);
    let back = Matrix3::new(1.0, 0.0, cx + tx, 0.0, 1.0, cy + ty, 0.0, 0.0, 1.0);
    Homography::from_matrix(back * rs * persp * to_origin).expect("bounded warp is invertible")
}

/// Whether `h` keeps the note body at least `border` pixels inside the frame.
pub fn keeps_in_frame(h: &Homography, note: &SyntheticNote, border: f64) -> bool {
    let (x0, y0, x1, y1) = note.body;
    let (w, hgt) = (note.image.width() as f64, note.image.height() as f64);
    [(x0, y0), (x1 + 1, y0), (x0, y1 + 1), (x1 + 1, y1 + 1)]
        .iter()
        .all(|&(x, y)| {
            h.apply(x as f64, y as f64).is_some_and(|(u, v)| {
                u >= border && v >= border && u <= w - border && v <= hgt - border
            })
        })
}

/// Random warp from `range`, redrawn until the note stays fully in frame.
pub fn random_homography_in_frame(
    note: &SyntheticNote,
    range: &WarpRange,
    rng: &mut impl Rng,
) -> Homography {
    let (w, h) = (note.image.width(), note.image.height());
    loop {
        let hom = random_homography(w, h, range, rng);
        if keeps_in_frame(&hom, note, 2.0) {
            return hom;
        }
    }
}

/// Scatters `fraction` of the background (white) pixels with random saturated colours.
pub fn add_salt_noise(
    img: &RasterImage,
    foreground: &BinaryMask,
    fraction: f64,
    rng: &mut impl Rng,
) -> RasterImage {
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if !foreground.get(x, y) && rng.gen_bool(fraction) {
                let hsv = hsv_to_rgb_f(
                    rng.gen_range(0.0..360.0),
                    rng.gen_range(0.5..1.0),
                    rng.gen_range(0.3..1.0),
                );
                out.pixel_mut(x, y)
                    .copy_from_slice(&hsv.map(|c| clamp_u8(c * 255.0)));
            }
        }
    }
    out
}
