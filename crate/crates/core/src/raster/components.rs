//! 8-connected component labelling of binary masks.

use super::image::BinaryMask;

/// One retained connected component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Label in [`Components::labels`], starting at 1.
    pub label: u32,
    pub area: usize,
    /// Inclusive `(x0, y0, x1, y1)`.
    pub bbox: (usize, usize, usize, usize),
}

/// Labelling result. Label 0 marks background and discarded components.
#[derive(Debug, Clone)]
pub struct Components {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    components: Vec<Component>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Mask of the `index`-th retained component.
    pub fn mask(&self, index: usize) -> BinaryMask {
        let label = self.components[index].label;
        let bits = self.labels.iter().map(|&l| l == label).collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("shape preserved")
    }

    pub fn masks(&self) -> Vec<BinaryMask> {
        (0..self.count()).map(|i| self.mask(i)).collect()
    }
}

/// Labels 8-connected components, dropping those with fewer than `min_area` pixels.
///
/// Components are numbered in raster order of their first pixel.
pub fn connected_components(mask: &BinaryMask, min_area: usize) -> Components {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut labels = vec![0u32; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    let mut members = Vec::new();
    let mut next = 1u32;
    for start in 0..w * h {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let label = next;
        next += 1;
        labels[start] = label;
        stack.push(start);
        members.clear();
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        while let Some(i) = stack.pop() {
            members.push(i);
            let (x, y) = (i % w, i / w);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if bits[j] && labels[j] == 0 {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        if members.len() < min_area {
            for &i in &members {
                labels[i] = u32::MAX;
            }
            next -= 1;
        } else {
            components.push(Component {
                label,
                area: members.len(),
                bbox: (x0, y0, x1, y1),
            });
        }
    }
    for l in labels.iter_mut() {
        if *l == u32::MAX {
            *l = 0;
        }
    }
    Components {
        width: w,
        height: h,
        labels,
        components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask() {
        assert_eq!(connected_components(&BinaryMask::empty(8, 8), 0).count(), 0);
    }

    #[test]
    fn two_blocks() {
        let m = BinaryMask::from_fn(20, 10, |x, y| y < 5 && (x < 5 || (10..15).contains(&x)));
        let cc = connected_components(&m, 1);
        assert_eq!(cc.count(), 2);
        assert_eq!(cc.components()[0].area, 25);
        assert_eq!(cc.components()[1].bbox, (10, 0, 14, 4));
    }

    #[test]
    fn diagonal_is_connected() {
        let m = BinaryMask::from_fn(4, 4, |x, y| x == y);
        assert_eq!(connected_components(&m, 1).count(), 1);
    }

    #[test]
    fn min_area_discards_and_relabels() {
        let mut m = BinaryMask::empty(10, 10);
        m.set(0, 0, true);
        for x in 4..8 {
            m.set(x, 5, true);
        }
        let cc = connected_components(&m, 2);
        assert_eq!(cc.count(), 1);
        assert_eq!(cc.components()[0].label, 1);
        assert_eq!(cc.label_at(0, 0), 0);
        assert_eq!(cc.mask(0).count(), 4);
    }
}
