//! Circle and rectangle sign candidates from a gradient field.
//!
//! Both detectors work on thinned edges: pixels whose gradient magnitude
//! clears the threshold and is a local maximum across the edge. Recall is
//! favoured over precision; the segmentation stage rejects candidates that
//! do not contain digits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::image::GradientField;

/// tan(22.5 deg): boundary between axis-aligned and diagonal gradient bins.
const TAN_22_5: f32 = 0.414_213_56;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub r_min: u32,
    pub r_max: u32,
    pub magnitude_threshold: f32,
    /// Fraction of the ideal perimeter (circles) or side length (rectangles)
    /// that must be supported by edges.
    pub vote_threshold: f64,
    /// Allowed `w / h` band for rectangles.
    pub rect_aspect_min: f64,
    pub rect_aspect_max: f64,
    pub rect_min_side: u32,
    pub rect_max_side: u32,
    /// Largest rectangle side tilt accepted, in degrees.
    pub rect_max_tilt_deg: f64,
    /// IoU above which the lower-scored of two candidates is dropped.
    pub nms_iou: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            r_min: 8,
            r_max: 60,
            magnitude_threshold: 120.0,
            vote_threshold: 0.5,
            rect_aspect_min: 0.6,
            rect_aspect_max: 0.95,
            rect_min_side: 16,
            rect_max_side: 200,
            rect_max_tilt_deg: 10.0,
            nms_iou: 0.3,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if self.r_min < 4 {
            return Err(Error::Config(format!("detector.r_min must be >= 4, got {}", self.r_min)));
        }
        if self.r_min >= self.r_max {
            return Err(Error::Config("detector.r_min must be below detector.r_max".into()));
        }
        if !frac(self.vote_threshold) || !frac(self.nms_iou) {
            return Err(Error::Config(
                "detector.vote_threshold and detector.nms_iou must lie in (0, 1]".into(),
            ));
        }
        if !(self.rect_aspect_min > 0.0 && self.rect_aspect_min < self.rect_aspect_max) {
            return Err(Error::Config("detector rect aspect band is empty".into()));
        }
        if self.rect_min_side < 4 || self.rect_min_side >= self.rect_max_side {
            return Err(Error::Config("detector rect side limits are inconsistent".into()));
        }
        if !(self.magnitude_threshold > 0.0) {
            return Err(Error::Config("detector.magnitude_threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleCandidate {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectCandidate {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
    pub score: f64,
}

impl RectCandidate {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Circle,
    #[serde(rename = "rect")]
    Rectangle,
}

impl ShapeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeKind::Circle => "circle",
            ShapeKind::Rectangle => "rect",
        }
    }
}

/// A detected sign outline together with the regions searched downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeCandidate {
    pub kind: ShapeKind,
    pub bbox: Rect,
    /// Area searched for digits.
    pub inner: Rect,
    /// Rectangles only: the band above the digits holding the legend.
    pub header: Option<Rect>,
    pub score: f64,
}

/// Side of the digit search square relative to the circle diameter.
pub const CIRCLE_INNER_FRACTION: f64 = 0.70;
/// Border inset of a rectangle's interior, relative to its width.
pub const RECT_INTERIOR_INSET: f64 = 0.08;
/// Share of the rectangle interior (from the top) reserved for the header.
pub const RECT_HEADER_FRACTION: f64 = 0.45;

impl ShapeCandidate {
    pub fn from_circle(c: &CircleCandidate) -> Self {
        let x0 = (c.cx - c.radius).floor() as i32;
        let y0 = (c.cy - c.radius).floor() as i32;
        let x1 = (c.cx + c.radius).ceil() as i32 + 1;
        let y1 = (c.cy + c.radius).ceil() as i32 + 1;
        let bbox = Rect::from_corners(x0, y0, x1, y1);
        let side = (2.0 * c.radius * CIRCLE_INNER_FRACTION).round().max(3.0) as i32;
        let ix = (c.cx - f64::from(side) / 2.0).round() as i32;
        let iy = (c.cy - f64::from(side) / 2.0).round() as i32;
        let inner = Rect::new(ix, iy, side, side).intersection(&bbox);
        ShapeCandidate {
            kind: ShapeKind::Circle,
            bbox,
            inner,
            header: None,
            score: c.score,
        }
    }

    pub fn from_rect(r: &RectCandidate) -> Self {
        let bbox = r.rect();
        let inset = (f64::from(r.w) * RECT_INTERIOR_INSET).round() as i32;
        let interior = Rect::new(
            r.x + inset,
            r.y + inset,
            (r.w - 2 * inset).max(1),
            (r.h - 2 * inset).max(1),
        );
        let header_h = (f64::from(interior.h) * RECT_HEADER_FRACTION).round() as i32;
        let header = Rect::new(interior.x, interior.y, interior.w, header_h.max(1));
        let inner = Rect::new(
            interior.x,
            interior.y + header_h,
            interior.w,
            (interior.h - header_h).max(1),
        );
        ShapeCandidate {
            kind: ShapeKind::Rectangle,
            bbox,
            inner,
            header: Some(header),
            score: r.score,
        }
    }
}

/// Thinned edge pixel with its unit gradient direction.
#[derive(Debug, Clone, Copy)]
struct EdgePixel {
    x: i32,
    y: i32,
    ux: f32,
    uy: f32,
    gx: i32,
    gy: i32,
}

/// Non-maximum suppression across the edge on a 4-bin quantized direction.
/// Ties go to the pixel nearer the origin along the scan.
fn thin_edges(grad: &GradientField, threshold: f32) -> Vec<EdgePixel> {
    let (w, h) = (grad.width, grad.height);
    let m = &grad.magnitude;
    let mut out = Vec::new();
    if w < 3 || h < 3 {
        return out;
    }
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let mag = m[i];
            if mag < threshold {
                continue;
            }
            let (gx, gy) = (grad.gx[i], grad.gy[i]);
            let (ax, ay) = (gx.abs() as f32, gy.abs() as f32);
            let (before, after) = if ay <= TAN_22_5 * ax {
                (i - 1, i + 1)
            } else if ax <= TAN_22_5 * ay {
                (i - w, i + w)
            } else if (gx > 0) == (gy > 0) {
                (i - w - 1, i + w + 1)
            } else {
                (i - w + 1, i + w - 1)
            };
            // only a neighbour on the same side of the edge can suppress:
            // a thin light strip between two opposite edges keeps both
            let same = |j: usize| gx * grad.gx[j] + gy * grad.gy[j] > 0;
            let beats = |j: usize, strict: bool| !same(j) || if strict { mag > m[j] } else { mag >= m[j] };
            if beats(before, true) && beats(after, false) {
                out.push(EdgePixel {
                    x: x as i32,
                    y: y as i32,
                    ux: gx as f32 / mag,
                    uy: gy as f32 / mag,
                    gx,
                    gy,
                });
            }
        }
    }
    out
}

/// Half-width of the spatial support window at radius `r`.
fn support_half_width(r: usize) -> usize {
    (r / 20).max(1)
}

fn expected_perimeter(r: f64) -> f64 {
    2.0 * PI * r
}

/// Gradient-direction Hough transform over `(cx, cy, r)`.
///
/// Every thinned edge pixel votes along its gradient line, in both senses,
/// at each radius in `[r_min, r_max]`. A cell is a peak when no 3x3x3
/// neighbour holds more votes; its support is the vote total of a spatial
/// window (3x3, widening with r) over the radius planes r-1..=r+1, and it
/// is kept when the support
/// reaches `vote_threshold` of the ideal perimeter `2 pi r`. Near-duplicate
/// peaks (concentric edges of one ring) collapse onto the best supported one.
pub fn detect_circles(grad: &GradientField, cfg: &DetectorConfig) -> Vec<CircleCandidate> {
    let (w, h) = (grad.width, grad.height);
    let r_min = cfg.r_min as usize;
    let r_max = cfg.r_max as usize;
    if r_max < r_min || w <= 2 * r_min || h <= 2 * r_min {
        return Vec::new();
    }
    let edges = thin_edges(grad, cfg.magnitude_threshold);
    if edges.is_empty() {
        return Vec::new();
    }
    let nr = r_max - r_min + 1;
    let plane = w * h;
    let thresholds: Vec<f64> = (r_min..=r_max)
        .map(|r| cfg.vote_threshold * expected_perimeter(r as f64))
        .collect();
    // Votes scatter with gradient-direction noise in proportion to r, so the
    // support window grows with the radius. It spans the three radius planes
    // around the peak; a qualifying peak holds at least its share of it.
    let halves: Vec<usize> = (r_min..=r_max).map(support_half_width).collect();
    let seeds: Vec<u16> = thresholds
        .iter()
        .zip(&halves)
        .map(|(t, &k)| ((t / (3 * (2 * k + 1) * (2 * k + 1)) as f64).ceil() as u16).max(2))
        .collect();

    let mut acc = vec![0u16; nr * plane];
    let mut seeded: Vec<u32> = Vec::new();
    for e in &edges {
        for sense in [1.0f32, -1.0] {
            let (dx, dy) = (sense * e.ux, sense * e.uy);
            for (ri, r) in (r_min..=r_max).enumerate() {
                let rf = r as f32;
                let cx = (e.x as f32 + dx * rf).round() as i64;
                let cy = (e.y as f32 + dy * rf).round() as i64;
                let ri64 = r as i64;
                if cx < ri64 || cy < ri64 || cx + ri64 >= w as i64 || cy + ri64 >= h as i64 {
                    continue;
                }
                let idx = ri * plane + cy as usize * w + cx as usize;
                let v = acc[idx].saturating_add(1);
                acc[idx] = v;
                if v == seeds[ri] {
                    seeded.push(idx as u32);
                }
            }
        }
    }

    let spatial_sum = |ri: usize, cx: usize, cy: usize, k: usize| -> (f64, f64, f64) {
        let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
        let base = ri * plane;
        for y in cy.saturating_sub(k)..=(cy + k).min(h - 1) {
            for x in cx.saturating_sub(k)..=(cx + k).min(w - 1) {
                let v = f64::from(acc[base + y * w + x]);
                s += v;
                sx += v * x as f64;
                sy += v * y as f64;
            }
        }
        (s, sx, sy)
    };

    struct Peak {
        c: CircleCandidate,
        support: f64,
    }
    let mut peaks: Vec<Peak> = Vec::new();
    for &idx in &seeded {
        let idx = idx as usize;
        let ri = idx / plane;
        let rem = idx % plane;
        let (cy, cx) = (rem / w, rem % w);
        let v = acc[idx];
        let mut is_max = true;
        'nb: for nri in ri.saturating_sub(1)..=(ri + 1).min(nr - 1) {
            for ny in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                for nx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                    let j = nri * plane + ny * w + nx;
                    if j == idx {
                        continue;
                    }
                    let u = acc[j];
                    if u > v || (u == v && j < idx) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
        }
        if !is_max {
            continue;
        }
        let k = halves[ri];
        let (mid, mx, my) = spatial_sum(ri, cx, cy, k);
        let (below, bx, by) = if ri > 0 { spatial_sum(ri - 1, cx, cy, k) } else { (0.0, 0.0, 0.0) };
        let (above, ax, ay) = if ri + 1 < nr { spatial_sum(ri + 1, cx, cy, k) } else { (0.0, 0.0, 0.0) };
        let s = below + mid + above;
        if s < thresholds[ri] {
            continue;
        }
        let r = (r_min + ri) as f64;
        let radius = r + (above - below) / s;
        let score = (s / expected_perimeter(r)).min(1.0);
        peaks.push(Peak {
            c: CircleCandidate {
                cx: (bx + mx + ax) / s,
                cy: (by + my + ay) / s,
                radius: radius.clamp(cfg.r_min as f64, cfg.r_max as f64),
                score,
            },
            support: s,
        });
    }

    peaks.sort_by(|a, b| {
        b.support
            .total_cmp(&a.support)
            .then(a.c.cy.total_cmp(&b.c.cy))
            .then(a.c.cx.total_cmp(&b.c.cx))
    });
    let mut kept: Vec<CircleCandidate> = Vec::new();
    for p in peaks {
        let dup = kept.iter().any(|k| {
            let d = (k.cx - p.c.cx).hypot(k.cy - p.c.cy);
            let ratio = p.c.radius / k.radius;
            d <= (0.3 * k.radius).max(3.0) && (0.6..=1.0 / 0.6).contains(&ratio)
        });
        if !dup {
            kept.push(p.c);
        }
    }
    sort_by_score(&mut kept, |c| (c.score, c.cy, c.cx));
    kept
}

fn sort_by_score<T>(items: &mut [T], key: impl Fn(&T) -> (f64, f64, f64)) {
    items.sort_by(|a, b| {
        let (sa, ya, xa) = key(a);
        let (sb, yb, xb) = key(b);
        sb.total_cmp(&sa).then(ya.total_cmp(&yb)).then(xa.total_cmp(&xb))
    });
}

/// Straight edge run. For vertical segments `pos` is the x of the fitted
/// line at the segment midpoint and `lo..=hi` the covered rows; horizontal
/// segments swap the axes.
#[derive(Debug, Clone, Copy)]
struct Segment {
    pos: f64,
    lo: i32,
    hi: i32,
    slope: f64,
    /// Gradient points towards +x (vertical) or +y (horizontal).
    rising: bool,
}

impl Segment {
    fn extent(&self) -> f64 {
        f64::from(self.hi - self.lo + 1)
    }
}

#[derive(Default, Clone, Copy)]
struct RunStats {
    n: f64,
    s_along: f64,
    s_across: f64,
    s_aa: f64,
    s_ac: f64,
    s_cc: f64,
    lo: i32,
    hi: i32,
}

fn find(parent: &mut [u32], mut a: u32) -> u32 {
    while parent[a as usize] != a {
        parent[a as usize] = parent[parent[a as usize] as usize];
        a = parent[a as usize];
    }
    a
}

/// Group thinned edges into near-vertical and near-horizontal straight runs.
fn extract_segments(
    edges: &[EdgePixel],
    w: usize,
    h: usize,
    cfg: &DetectorConfig,
) -> (Vec<Segment>, Vec<Segment>) {
    // classes 1/2: vertical edge rising/falling in x; 3/4: horizontal edge
    // rising/falling in y. Runs never mix polarities, so a sign outline
    // stays separate from a dark border drawn just inside it.
    let mut class = vec![0u8; w * h];
    let mut slot = vec![u32::MAX; w * h];
    let mut members: Vec<(i32, i32, u8)> = Vec::new();
    for e in edges {
        let (ax, ay) = (e.gx.abs() as f32, e.gy.abs() as f32);
        let c = if ay <= TAN_22_5 * ax {
            if e.gx > 0 { 1 } else { 2 }
        } else if ax <= TAN_22_5 * ay {
            if e.gy > 0 { 3 } else { 4 }
        } else {
            continue;
        };
        let i = e.y as usize * w + e.x as usize;
        class[i] = c;
        slot[i] = members.len() as u32;
        members.push((e.x, e.y, c));
    }
    let mut parent: Vec<u32> = (0..members.len() as u32).collect();
    for (k, &(x, y, c)) in members.iter().enumerate() {
        let (x, y) = (x as usize, y as usize);
        let mut unite = |j: usize| {
            if class[j] == c {
                let a = find(&mut parent, k as u32);
                let b = find(&mut parent, slot[j]);
                if a != b {
                    parent[a.max(b) as usize] = a.min(b);
                }
            }
        };
        if x > 0 {
            unite(y * w + x - 1);
        }
        if y > 0 {
            unite((y - 1) * w + x);
            if x > 0 {
                unite((y - 1) * w + x - 1);
            }
            if x + 1 < w {
                unite((y - 1) * w + x + 1);
            }
        }
        // bridge single-pixel gaps along the edge direction
        if c <= 2 && y > 1 {
            for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                unite((y - 2) * w + nx);
            }
        } else if c > 2 && x > 1 {
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                unite(ny * w + x - 2);
            }
        }
    }

    let mut stats: Vec<RunStats> = vec![RunStats::default(); members.len()];
    for (k, &(x, y, c)) in members.iter().enumerate() {
        let root = find(&mut parent, k as u32) as usize;
        let (along, across) = if c <= 2 { (y, x) } else { (x, y) };
        let st = &mut stats[root];
        if st.n == 0.0 {
            st.lo = along;
            st.hi = along;
        }
        let (a, b) = (f64::from(along), f64::from(across));
        st.n += 1.0;
        st.s_along += a;
        st.s_across += b;
        st.s_aa += a * a;
        st.s_ac += a * b;
        st.s_cc += b * b;
        st.lo = st.lo.min(along);
        st.hi = st.hi.max(along);
    }

    let min_len = (0.4 * f64::from(cfg.rect_min_side)).max(6.0);
    let max_slope = cfg.rect_max_tilt_deg.to_radians().tan();
    let mut vertical = Vec::new();
    let mut horizontal = Vec::new();
    for (k, st) in stats.iter().enumerate() {
        if st.n == 0.0 {
            continue;
        }
        let extent = f64::from(st.hi - st.lo + 1);
        if extent < min_len || st.n < 0.6 * extent {
            continue;
        }
        let ma = st.s_along / st.n;
        let mc = st.s_across / st.n;
        let var_a = st.s_aa / st.n - ma * ma;
        let cov = st.s_ac / st.n - ma * mc;
        let var_c = st.s_cc / st.n - mc * mc;
        if var_a <= 0.0 {
            continue;
        }
        let slope = cov / var_a;
        let resid = (var_c - cov * cov / var_a).max(0.0);
        if slope.abs() > max_slope || resid > 1.0 {
            continue;
        }
        let mid = 0.5 * f64::from(st.lo + st.hi);
        let seg = Segment {
            pos: mc + slope * (mid - ma),
            lo: st.lo,
            hi: st.hi,
            slope,
            rising: members[k].2 % 2 == 1,
        };
        if members[k].2 <= 2 {
            vertical.push(seg);
        } else {
            horizontal.push(seg);
        }
    }
    (vertical, horizontal)
}

/// Axis-aligned (up to a small tilt) rectangle detection by pairing straight
/// edge segments.
///
/// Near-vertical runs are paired into left/right sides with matching row
/// extents, then closed by near-horizontal runs whose ends align with both
/// sides, all within 15% of the side length. The score is the mean fraction of
/// each side covered by its segment.
pub fn detect_rectangles(grad: &GradientField, cfg: &DetectorConfig) -> Vec<RectCandidate> {
    let (w, h) = (grad.width, grad.height);
    let edges = thin_edges(grad, cfg.magnitude_threshold);
    if edges.is_empty() {
        return Vec::new();
    }
    let (mut vertical, mut horizontal) = extract_segments(&edges, w, h, cfg);
    vertical.sort_by(|a, b| a.pos.total_cmp(&b.pos));
    horizontal.sort_by(|a, b| a.pos.total_cmp(&b.pos));

    let tol = 0.15;
    let min_side = f64::from(cfg.rect_min_side);
    let max_side = f64::from(cfg.rect_max_side);
    let parallel = (3.0f64).to_radians().tan() * 2.0;
    let mut found: Vec<RectCandidate> = Vec::new();

    for (li, left) in vertical.iter().enumerate() {
        for right in &vertical[li + 1..] {
            let width = right.pos - left.pos;
            if width < min_side * 0.85 {
                continue;
            }
            if width > max_side * 1.15 {
                break;
            }
            // opposite polarities: a bright shape on dark ground or the reverse
            if left.rising == right.rising || (left.slope - right.slope).abs() > parallel {
                continue;
            }
            let top = 0.5 * f64::from(left.lo + right.lo);
            let bottom = 0.5 * f64::from(left.hi + right.hi);
            let height = bottom - top;
            if height < min_side * 0.7 {
                continue;
            }
            let side_tol = tol * height + 2.0;
            if f64::from((left.lo - right.lo).abs()) > side_tol
                || f64::from((left.hi - right.hi).abs()) > side_tol
            {
                continue;
            }
            let aspect = width / height;
            if aspect < cfg.rect_aspect_min * 0.8 || aspect > cfg.rect_aspect_max * 1.25 {
                continue;
            }
            let cap_tol = tol * width + 2.0;
            let best_cap = |target: f64, rising: bool| -> Option<Segment> {
                let start = horizontal.partition_point(|s| s.pos < target - side_tol);
                horizontal[start..]
                    .iter()
                    .take_while(|s| s.pos <= target + side_tol)
                    .filter(|s| {
                        s.rising == rising
                            && (f64::from(s.lo) - left.pos).abs() <= cap_tol
                            && (f64::from(s.hi) - right.pos).abs() <= cap_tol
                    })
                    .min_by(|a, b| {
                        let da = (a.pos - target).abs()
                            + (f64::from(a.lo) - left.pos).abs()
                            + (f64::from(a.hi) - right.pos).abs();
                        let db = (b.pos - target).abs()
                            + (f64::from(b.lo) - left.pos).abs()
                            + (f64::from(b.hi) - right.pos).abs();
                        da.total_cmp(&db)
                    })
                    .copied()
            };
            let (Some(cap_top), Some(cap_bottom)) = (best_cap(top, left.rising), best_cap(bottom, right.rising)) else {
                continue;
            };
            let x0 = left.pos.round() as i32;
            let x1 = right.pos.round() as i32;
            let y0 = cap_top.pos.round() as i32;
            let y1 = cap_bottom.pos.round() as i32;
            let rect = Rect::from_corners(x0, y0, x1 + 1, y1 + 1);
            if rect.is_empty() || !rect.fits_in(w, h) {
                continue;
            }
            let (rw, rh) = (f64::from(rect.w), f64::from(rect.h));
            let aspect = rw / rh;
            if aspect < cfg.rect_aspect_min
                || aspect > cfg.rect_aspect_max
                || rw.min(rh) < min_side
                || rw.max(rh) > max_side
            {
                continue;
            }
            let score = [
                left.extent() / rh,
                right.extent() / rh,
                cap_top.extent() / rw,
                cap_bottom.extent() / rw,
            ]
            .iter()
            .map(|f| f.min(1.0))
            .sum::<f64>()
                / 4.0;
            if score < cfg.vote_threshold {
                continue;
            }
            found.push(RectCandidate {
                x: rect.x,
                y: rect.y,
                w: rect.w,
                h: rect.h,
                score,
            });
        }
    }

    let key = |r: &RectCandidate| {
        let (cx, cy) = r.rect().center();
        (r.score, cy, cx)
    };
    sort_by_score(&mut found, key);
    // A sign's outline and its inner border form near-duplicate nested
    // rectangles; the outline wins when its support is comparable.
    let mut kept: Vec<RectCandidate> = Vec::new();
    for r in found {
        match kept.iter_mut().find(|k| k.rect().iou(&r.rect()) > 0.6) {
            None => kept.push(r),
            Some(k) => {
                if r.rect().contains_rect(&k.rect()) && r.rect().area() > k.rect().area() && r.score >= 0.85 * k.score {
                    *k = r;
                }
            }
        }
    }
    sort_by_score(&mut kept, key);
    kept
}

/// Greedy non-maximum suppression; input must be sorted by descending score.
pub fn suppress_overlaps(candidates: &[ShapeCandidate], cfg: &DetectorConfig) -> Vec<ShapeCandidate> {
    let mut kept: Vec<ShapeCandidate> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| k.bbox.iou(&c.bbox) <= cfg.nms_iou) {
            kept.push(c.clone());
        }
    }
    kept
}

/// Candidates of one shape family after overlap suppression, best first.
pub fn detect_shapes(grad: &GradientField, kind: ShapeKind, cfg: &DetectorConfig) -> Vec<ShapeCandidate> {
    let mut all: Vec<ShapeCandidate> = match kind {
        ShapeKind::Circle => detect_circles(grad, cfg).iter().map(ShapeCandidate::from_circle).collect(),
        ShapeKind::Rectangle => detect_rectangles(grad, cfg)
            .iter()
            .map(ShapeCandidate::from_rect)
            .collect(),
    };
    all.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.bbox.y.cmp(&b.bbox.y))
            .then(a.bbox.x.cmp(&b.bbox.x))
    });
    suppress_overlaps(&all, cfg)
}
