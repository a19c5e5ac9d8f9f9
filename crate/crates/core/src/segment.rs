//! Digit segmentation inside a candidate: adaptive threshold, 8-connected
//! component labeling, geometric filtering and glyph normalization.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Rect;
use crate::image::{adaptive_threshold, BinaryImage, GrayFrame};
use crate::shape::ShapeCandidate;

/// Side of the square canvas glyphs are normalized onto.
pub const GLYPH_SIZE: usize = 16;
pub const GLYPH_LEN: usize = GLYPH_SIZE * GLYPH_SIZE;
pub const MAX_DIGITS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub label: u32,
    /// Bounding box in the coordinates of the labeled image.
    pub bbox: Rect,
    pub area: usize,
    /// Row-major membership over `bbox`.
    pub mask: Vec<bool>,
}

impl Component {
    pub fn centroid_x(&self) -> f64 {
        let w = self.bbox.w as usize;
        let sum: usize = self
            .mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i % w)
            .sum();
        f64::from(self.bbox.x) + sum as f64 / self.area as f64
    }

    /// Foreground pixels in labeled-image coordinates.
    pub fn pixels(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        let w = self.bbox.w as usize;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| (self.bbox.x + (i % w) as i32, self.bbox.y + (i / w) as i32))
    }
}

/// Size-normalized glyph ready for the digit classifier; 1.0 is ink.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitGlyph {
    pub bitmap: Vec<f64>,
    pub source_bbox: Rect,
    pub order_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    /// Threshold offset in luminance levels.
    pub offset: i32,
    /// Fixed threshold window; `None` picks the odd size nearest `roi_height / 2`.
    pub window: Option<usize>,
    /// Components must be at least this much darker than their
    /// surroundings. Keeps sensor-noise specks out of the digit search.
    pub min_contrast: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            offset: 8,
            window: None,
            min_contrast: 24.0,
        }
    }
}

impl SegmentConfig {
    pub fn window_for(&self, roi_height: usize) -> usize {
        if let Some(w) = self.window {
            return w;
        }
        let mut n = ((roi_height as f64) / 2.0).round() as usize;
        if n.is_multiple_of(2) {
            n += 1;
        }
        n.max(3)
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn find(&mut self, mut a: u32) -> u32 {
        while self.parent[a as usize] != a {
            let p = self.parent[a as usize];
            self.parent[a as usize] = self.parent[p as usize];
            a = p;
        }
        a
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi as usize] = lo;
        }
    }
}

/// 8-connected labeling. Labels are dense from 1 and assigned in order of
/// bounding-box left edge (ties by top edge).
pub fn label_components(binary: &BinaryImage) -> Vec<Component> {
    let (w, h) = (binary.width, binary.height);
    let mut provisional = vec![0u32; w * h];
    let mut uf = UnionFind { parent: vec![0] };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !binary.bits[i] {
                continue;
            }
            let mut neighbours = [0u32; 4];
            let mut n = 0;
            if x > 0 && provisional[i - 1] != 0 {
                neighbours[n] = provisional[i - 1];
                n += 1;
            }
            if y > 0 {
                let up = i - w;
                if x > 0 && provisional[up - 1] != 0 {
                    neighbours[n] = provisional[up - 1];
                    n += 1;
                }
                if provisional[up] != 0 {
                    neighbours[n] = provisional[up];
                    n += 1;
                }
                if x + 1 < w && provisional[up + 1] != 0 {
                    neighbours[n] = provisional[up + 1];
                    n += 1;
                }
            }
            if n == 0 {
                let label = uf.parent.len() as u32;
                uf.parent.push(label);
                provisional[i] = label;
            } else {
                let first = neighbours[0];
                for &other in &neighbours[1..n] {
                    uf.union(first, other);
                }
                provisional[i] = first;
            }
        }
    }

    struct Acc {
        x0: usize,
        y0: usize,
        x1: usize,
        y1: usize,
        area: usize,
    }
    let mut root_slot = vec![u32::MAX; uf.parent.len()];
    let mut accs: Vec<Acc> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if provisional[i] == 0 {
                continue;
            }
            let root = uf.find(provisional[i]);
            if root_slot[root as usize] == u32::MAX {
                root_slot[root as usize] = accs.len() as u32;
                accs.push(Acc {
                    x0: x,
                    y0: y,
                    x1: x,
                    y1: y,
                    area: 0,
                });
            }
            let slot = root_slot[root as usize];
            provisional[i] = slot + 1;
            let a = &mut accs[slot as usize];
            a.x0 = a.x0.min(x);
            a.x1 = a.x1.max(x);
            a.y1 = y;
            a.area += 1;
        }
    }

    let mut components: Vec<Component> = accs
        .iter()
        .map(|a| {
            let (bw, bh) = (a.x1 - a.x0 + 1, a.y1 - a.y0 + 1);
            Component {
                label: 0,
                bbox: Rect::new(a.x0 as i32, a.y0 as i32, bw as i32, bh as i32),
                area: a.area,
                mask: vec![false; bw * bh],
            }
        })
        .collect();
    for y in 0..h {
        for x in 0..w {
            let slot = provisional[y * w + x];
            if slot == 0 {
                continue;
            }
            let c = &mut components[(slot - 1) as usize];
            let (lx, ly) = (x - c.bbox.x as usize, y - c.bbox.y as usize);
            let bw = c.bbox.w as usize;
            c.mask[ly * bw + lx] = true;
        }
    }
    components.sort_by_key(|c| (c.bbox.x, c.bbox.y));
    for (k, c) in components.iter_mut().enumerate() {
        c.label = k as u32 + 1;
    }
    components
}

/// Keep components shaped like digits of one line of text, left to right.
pub fn filter_digits(components: &[Component], roi_height: usize) -> Vec<Component> {
    let rh = roi_height as f64;
    let mut kept: Vec<&Component> = components
        .iter()
        .filter(|c| {
            let (w, h) = (f64::from(c.bbox.w), f64::from(c.bbox.h));
            let aspect = w / h;
            (0.30 * rh..=0.85 * rh).contains(&h)
                && (0.15..=0.95).contains(&aspect)
                && c.area as f64 >= 0.25 * c.bbox.area() as f64
        })
        .collect();
    if kept.is_empty() {
        return Vec::new();
    }
    let mut heights: Vec<i32> = kept.iter().map(|c| c.bbox.h).collect();
    heights.sort_unstable();
    let median = if heights.len() % 2 == 1 {
        f64::from(heights[heights.len() / 2])
    } else {
        0.5 * f64::from(heights[heights.len() / 2 - 1] + heights[heights.len() / 2])
    };
    kept.retain(|c| (f64::from(c.bbox.h) - median).abs() <= 0.25 * median);
    let mut ordered: Vec<(f64, &Component)> = kept.into_iter().map(|c| (c.centroid_x(), c)).collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    if ordered.len() > MAX_DIGITS {
        // tightest run of MAX_DIGITS neighbours
        let start = (0..=ordered.len() - MAX_DIGITS)
            .min_by(|&a, &b| {
                let span = |s: usize| ordered[s + MAX_DIGITS - 1].0 - ordered[s].0;
                span(a).total_cmp(&span(b))
            })
            .unwrap_or(0);
        ordered = ordered[start..start + MAX_DIGITS].to_vec();
    }
    ordered.into_iter().map(|(_, c)| c.clone()).collect()
}

/// Scale a component mask onto the glyph canvas, preserving aspect ratio.
///
/// The longer side maps to `GLYPH_SIZE`; the shorter is rounded up and
/// centred. Samples are bilinear over the 0/1 mask with edge clamping.
/// `origin` is the position of the labeled image in frame coordinates.
pub fn normalize_glyph(component: &Component, origin: (i32, i32)) -> DigitGlyph {
    let (w, h) = (component.bbox.w as usize, component.bbox.h as usize);
    let scale = GLYPH_SIZE as f64 / w.max(h) as f64;
    let out_w = ((w as f64 * scale) - 1e-9).ceil().clamp(1.0, GLYPH_SIZE as f64) as usize;
    let out_h = ((h as f64 * scale) - 1e-9).ceil().clamp(1.0, GLYPH_SIZE as f64) as usize;
    let (fx, fy) = (w as f64 / out_w as f64, h as f64 / out_h as f64);
    let (ox, oy) = ((GLYPH_SIZE - out_w) / 2, (GLYPH_SIZE - out_h) / 2);
    let ink = |x: usize, y: usize| if component.mask[y * w + x] { 1.0 } else { 0.0 };
    let mut bitmap = vec![0.0; GLYPH_LEN];
    for v in 0..out_h {
        let sy = ((v as f64 + 0.5) * fy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = sy - y0 as f64;
        for u in 0..out_w {
            let sx = ((u as f64 + 0.5) * fx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = sx - x0 as f64;
            let top = ink(x0, y0) * (1.0 - tx) + ink(x1, y0) * tx;
            let bottom = ink(x0, y1) * (1.0 - tx) + ink(x1, y1) * tx;
            bitmap[(oy + v) * GLYPH_SIZE + ox + u] = top * (1.0 - ty) + bottom * ty;
        }
    }
    if bitmap.iter().all(|&v| v <= 0.0) {
        // thin strokes can fall between samples; keep the glyph non-empty
        if let Some(i) = component.mask.iter().position(|&m| m) {
            let (u, v) = ((i % w) as f64 / fx, (i / w) as f64 / fy);
            let (u, v) = ((u as usize).min(out_w - 1), (v as usize).min(out_h - 1));
            bitmap[(oy + v) * GLYPH_SIZE + ox + u] = 1.0;
        }
    }
    DigitGlyph {
        bitmap,
        source_bbox: component.bbox.translate(origin.0, origin.1),
        order_index: 0,
    }
}

/// Binarize `region`, label it and keep digit-shaped components.
/// Returns the kept components in region coordinates.
pub fn digit_components(
    frame: &GrayFrame,
    region: &Rect,
    cfg: &SegmentConfig,
) -> Result<Vec<Component>> {
    let roi_h = region.h as usize;
    let binary = adaptive_threshold(frame, region, cfg.window_for(roi_h), cfg.offset)?;
    let mut comps = label_components(&binary);
    comps.retain(|c| stroke_contrast(frame, region, c) >= cfg.min_contrast);
    Ok(filter_digits(&comps, roi_h))
}

/// Mean luminance of the unmasked pixels in the component's box grown by
/// one pixel, minus the mean over the component itself. `region` locates
/// the labeled image in the frame.
pub fn stroke_contrast(frame: &GrayFrame, region: &Rect, c: &Component) -> f64 {
    let b = c.bbox.translate(region.x, region.y);
    let grown = Rect::from_corners(b.x - 1, b.y - 1, b.right() + 1, b.bottom() + 1).intersection(region);
    let (mut ink, mut n_ink, mut bg, mut n_bg) = (0u64, 0u64, 0u64, 0u64);
    for y in grown.y..grown.bottom() {
        for x in grown.x..grown.right() {
            let v = u64::from(frame.get(x as usize, y as usize));
            let inside = b.contains_point(x, y) && c.mask[((y - b.y) * b.w + (x - b.x)) as usize];
            if inside {
                ink += v;
                n_ink += 1;
            } else {
                bg += v;
                n_bg += 1;
            }
        }
    }
    if n_ink == 0 || n_bg == 0 {
        return 0.0;
    }
    bg as f64 / n_bg as f64 - ink as f64 / n_ink as f64
}

/// Full digit search inside a candidate. An empty result means the candidate
/// holds no digits and is not a speed sign.
pub fn segment_roi(
    frame: &GrayFrame,
    candidate: &ShapeCandidate,
    cfg: &SegmentConfig,
) -> Result<Vec<DigitGlyph>> {
    let region = candidate.inner.intersection(&frame.bounds());
    if region.w < 3 || region.h < 3 {
        return Ok(Vec::new());
    }
    let comps = digit_components(frame, &region, cfg)?;
    Ok(comps
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut g = normalize_glyph(c, (region.x, region.y));
            g.order_index = k;
            g
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_component(w: i32, h: i32) -> Component {
        Component {
            label: 1,
            bbox: Rect::new(0, 0, w, h),
            area: (w * h) as usize,
            mask: vec![true; (w * h) as usize],
        }
    }

    #[test]
    fn empty_and_diagonal() {
        assert!(label_components(&BinaryImage::new(5, 5)).is_empty());
        let mut b = BinaryImage::new(3, 3);
        b.set(0, 0, true);
        b.set(1, 1, true);
        let comps = label_components(&b);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].area, 2);
        assert_eq!(comps[0].label, 1);
    }

    #[test]
    fn labels_follow_left_edge() {
        let mut b = BinaryImage::new(10, 4);
        b.set(7, 0, true);
        b.set(2, 3, true);
        b.set(2, 2, true);
        let comps = label_components(&b);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].bbox, Rect::new(2, 2, 1, 2));
        assert_eq!(comps[1].label, 2);
    }

    #[test]
    fn filter_empty() {
        assert!(filter_digits(&[], 40).is_empty());
    }

    #[test]
    fn filter_rejects_hollow_and_small() {
        let roi_h = 40;
        let digit = Component {
            bbox: Rect::new(5, 5, 12, 24),
            ..full_component(12, 24)
        };
        let speck = Component {
            bbox: Rect::new(30, 10, 2, 2),
            ..full_component(2, 2)
        };
        // 12x24 outline one pixel thick: area 68 < 0.25 * 288
        let mut hollow = full_component(12, 24);
        hollow.bbox = Rect::new(20, 5, 12, 24);
        for y in 1..23 {
            for x in 1..11 {
                hollow.mask[y * 12 + x] = false;
            }
        }
        hollow.area = hollow.mask.iter().filter(|&&m| m).count();
        let kept = filter_digits(&[digit.clone(), speck, hollow], roi_h);
        assert_eq!(kept, vec![digit]);
    }

    #[test]
    fn glyph_exact_scalings() {
        let g = normalize_glyph(&full_component(16, 16), (0, 0));
        assert!(g.bitmap.iter().all(|&v| v == 1.0));
        let g = normalize_glyph(&full_component(8, 8), (3, 4));
        assert!(g.bitmap.iter().all(|&v| v == 1.0));
        assert_eq!(g.source_bbox, Rect::new(3, 4, 8, 8));
    }

    #[test]
    fn tall_glyph_is_centred() {
        let g = normalize_glyph(&full_component(10, 30), (0, 0));
        for y in 0..GLYPH_SIZE {
            for x in 0..GLYPH_SIZE {
                let expect = if (5..11).contains(&x) { 1.0 } else { 0.0 };
                assert_eq!(g.bitmap[y * GLYPH_SIZE + x], expect, "({x},{y})");
            }
        }
    }

    #[test]
    fn window_is_odd() {
        let cfg = SegmentConfig::default();
        assert_eq!(cfg.window_for(28), 15);
        assert_eq!(cfg.window_for(30), 15);
        assert_eq!(cfg.window_for(2), 3);
    }
}
