use crate::error::{Error, Result};

/// Row-major 8-bit raster with one (gray) or three (RGB) interleaved channels.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0
            || height == 0
            || !(channels == 1 || channels == 3)
            || data.len() != width * height * channels
        {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Image with every pixel set to `value` (one entry per channel).
    pub fn filled(width: usize, height: usize, value: &[u8]) -> Result<Self> {
        let channels = value.len();
        let data = value
            .iter()
            .copied()
            .cycle()
            .take(width * height * channels)
            .collect();
        Self::new(width, height, channels, data)
    }

    pub fn from_gray_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data)
    }

    pub fn from_rgb_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, 3, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Sample with replicate-edge padding.
    #[inline]
    pub fn sample_clamped(&self, x: isize, y: isize, c: usize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.sample(x, y, c)
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn require_channels(&self, expected: usize) -> Result<()> {
        if self.channels != expected {
            return Err(Error::ChannelMismatch {
                expected,
                got: self.channels,
            });
        }
        Ok(())
    }

    /// Extracts channel `c` as a single-channel image.
    pub fn channel(&self, c: usize) -> RasterImage {
        assert!(c < self.channels);
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|p| p[c])
            .collect();
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Interleaves single-channel planes into one image.
    pub fn from_planes(planes: &[RasterImage]) -> Result<RasterImage> {
        let first = planes.first().ok_or(Error::EmptySamples)?;
        if planes
            .iter()
            .any(|p| p.channels != 1 || p.width != first.width || p.height != first.height)
        {
            return Err(Error::SizeMismatch("planes differ in shape".into()));
        }
        let n = first.pixel_count();
        let mut data = Vec::with_capacity(n * planes.len());
        for i in 0..n {
            for p in planes {
                data.push(p.data[i]);
            }
        }
        RasterImage::new(first.width, first.height, planes.len(), data)
    }

    /// Copies the `w`×`h` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<RasterImage> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::InvalidParameter(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        RasterImage::new(w, h, self.channels, data)
    }

    /// Applies `f` to every sample.
    pub fn map_samples(&self, f: impl Fn(u8) -> u8) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Rounds half away from zero and clamps into the 8-bit range.
#[inline]
pub fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Per-pixel foreground indicator.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("count", &self.count())
            .finish()
    }
}

impl BinaryMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels: 1,
                len: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn same_size(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn matches_image(&self, img: &RasterImage) -> bool {
        self.width == img.width() && self.height == img.height()
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> BinaryMask {
        assert!(self.same_size(other), "mask dimensions differ");
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn and(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a || b)
    }

    /// `self ∧ ¬other`
    pub fn and_not(&self, other: &BinaryMask) -> BinaryMask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn count_and(&self, other: &BinaryMask) -> usize {
        assert!(self.same_size(other), "mask dimensions differ");
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count()
    }

    /// Tight bounding box `(x0, y0, x1, y1)` (inclusive) of the set pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            let row = &self.bits[y * self.width..(y + 1) * self.width];
            let Some(first) = row.iter().position(|&b| b) else {
                continue;
            };
            let last = row.iter().rposition(|&b| b).unwrap_or(first);
            bbox = Some(match bbox {
                None => (first, y, last, y),
                Some((x0, y0, x1, _)) => (x0.min(first), y0, x1.max(last), y),
            });
        }
        bbox
    }

    /// Mask rendered as a 0/255 gray image.
    pub fn to_image(&self) -> RasterImage {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        RasterImage::new(self.width, self.height, 1, data).expect("mask has nonzero size")
    }
}

/// Border strips and corner squares used to localise structural damage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMasks {
    /// Top, bottom, left, right.
    pub edges: [BinaryMask; 4],
    /// Top-left, top-right, bottom-left, bottom-right.
    pub corners: [BinaryMask; 4],
}

impl RegionMasks {
    pub const EDGE_NAMES: [&'static str; 4] = ["top", "bottom", "left", "right"];
    pub const CORNER_NAMES: [&'static str; 4] =
        ["top_left", "top_right", "bottom_left", "bottom_right"];

    /// Regions for the inclusive box `(x0, y0, x1, y1)` inside a `width`×`height` frame.
    ///
    /// Strip width is `edge_fraction · min(w, h)` and corner side is
    /// `corner_fraction · min(w, h)`, both at least one pixel.
    pub fn for_box(
        width: usize,
        height: usize,
        bbox: (usize, usize, usize, usize),
        edge_fraction: f64,
        corner_fraction: f64,
    ) -> Result<RegionMasks> {
        let (x0, y0, x1, y1) = bbox;
        if x1 < x0 || y1 < y0 || x1 >= width || y1 >= height {
            return Err(Error::InvalidParameter(format!(
                "region box {bbox:?} outside {width}x{height}"
            )));
        }
        let bw = x1 - x0 + 1;
        let bh = y1 - y0 + 1;
        let short = bw.min(bh) as f64;
        let strip = ((edge_fraction * short).round() as usize).clamp(1, bw.min(bh));
        let side = ((corner_fraction * short).round() as usize).clamp(1, bw.min(bh));
        let rect = |rx0: usize, ry0: usize, rx1: usize, ry1: usize| {
            BinaryMask::from_fn(width, height, |x, y| {
                x >= rx0 && x <= rx1 && y >= ry0 && y <= ry1
            })
        };
        let edges = [
            rect(x0, y0, x1, y0 + strip - 1),
            rect(x0, y1 + 1 - strip, x1, y1),
            rect(x0, y0, x0 + strip - 1, y1),
            rect(x1 + 1 - strip, y0, x1, y1),
        ];
        let corners = [
            rect(x0, y0, x0 + side - 1, y0 + side - 1),
            rect(x1 + 1 - side, y0, x1, y0 + side - 1),
            rect(x0, y1 + 1 - side, x0 + side - 1, y1),
            rect(x1 + 1 - side, y1 + 1 - side, x1, y1),
        ];
        Ok(RegionMasks { edges, corners })
    }

    /// Regions covering the whole frame.
    pub fn for_frame(
        width: usize,
        height: usize,
        edge_fraction: f64,
        corner_fraction: f64,
    ) -> Result<RegionMasks> {
        Self::for_box(
            width,
            height,
            (0, 0, width - 1, height - 1),
            edge_fraction,
            corner_fraction,
        )
    }
}
