//! Procedural speed-limit signs: circular rim signs with dark digits and
//! rectangular signs with a two-line legend above the digits.

use serde::{Deserialize, Serialize};

use super::canvas::{Canvas, Segment};
use super::font;
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::image::GrayFrame;
use crate::odr::RegionMode;
use crate::shape::{RectCandidate, ShapeCandidate, ShapeKind};

/// Legend printed above the digits of a rectangular sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Legend {
    SpeedLimit,
    TruckSpeed,
}

impl Legend {
    fn lines(&self) -> [&'static str; 2] {
        match self {
            Legend::SpeedLimit => ["SPEED", "LIMIT"],
            Legend::TruckSpeed => ["TRUCK", "SPEED"],
        }
    }
}

/// Rectangular signs are this wide relative to their height.
pub const US_ASPECT: f64 = 0.8;
/// Inner radius of the circular rim relative to the outer radius.
pub const EU_RIM_INNER: f64 = 0.78;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignSpec {
    pub mode: RegionMode,
    pub value: u32,
    /// Digit font variant, 0-2.
    pub variant: u8,
    /// Multiplier on the font's pen width.
    pub stroke_scale: f64,
    pub tilt_deg: f64,
    /// Diameter of a circular sign, height of a rectangular one, in pixels.
    pub scale: f64,
    /// Ink and face luminance.
    pub contrast: (f64, f64),
    pub noise_sigma: f64,
    pub legend: Legend,
    pub seed: u64,
}

impl SignSpec {
    pub fn new(mode: RegionMode, value: u32, scale: f64) -> Self {
        SignSpec {
            mode,
            value,
            variant: 0,
            stroke_scale: 1.0,
            tilt_deg: 0.0,
            scale,
            contrast: (30.0, 230.0),
            noise_sigma: 0.0,
            legend: Legend::SpeedLimit,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mode.default_values().contains(&self.value) {
            return Err(Error::Argument(format!(
                "{} is not a valid {} speed value",
                self.value, self.mode
            )));
        }
        if self.tilt_deg.abs() > 15.0 {
            return Err(Error::Argument(format!("tilt {} exceeds 15 degrees", self.tilt_deg)));
        }
        if !(16.0..=240.0).contains(&self.scale) {
            return Err(Error::Argument(format!("sign scale {} outside [16, 240]", self.scale)));
        }
        if !(self.stroke_scale > 0.3 && self.stroke_scale < 2.0) {
            return Err(Error::Argument("stroke scale must lie in (0.3, 2)".into()));
        }
        Ok(())
    }

    pub fn digits(&self) -> Vec<u8> {
        self.value
            .to_string()
            .bytes()
            .map(|b| b - b'0')
            .collect()
    }

    /// Size of the sign's axis-aligned frame before tilt, `(w, h)`.
    pub fn extent(&self) -> (f64, f64) {
        match self.mode {
            RegionMode::Eu => (self.scale, self.scale),
            RegionMode::Us => (self.scale * US_ASPECT, self.scale),
        }
    }

    pub fn kind(&self) -> ShapeKind {
        self.mode.shape()
    }
}

/// Where a sign ended up on the canvas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignLayout {
    pub kind: ShapeKind,
    pub center: (f64, f64),
    /// Outer radius (circles) or the untilted `w x h` frame (rectangles).
    pub size: (f64, f64),
    pub bbox: Rect,
    pub digits: Vec<u8>,
    /// One box per digit, left to right, bounding all of its ink.
    pub glyph_boxes: Vec<Rect>,
    /// Rectangles only: legend band in frame coordinates.
    pub header_box: Option<Rect>,
}

#[derive(Debug, Clone)]
pub struct RenderedSign {
    pub patch: GrayFrame,
    pub layout: SignLayout,
}

struct Placement {
    cx: f64,
    cy: f64,
    sin: f64,
    cos: f64,
}

impl Placement {
    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (
            self.cx + self.cos * x - self.sin * y,
            self.cy + self.sin * x + self.cos * y,
        )
    }

    fn map_segments(&self, segs: &[Segment]) -> Vec<Segment> {
        segs.iter().map(|&(a, b)| (self.map(a), self.map(b))).collect()
    }
}

fn ink_box(segs: &[Segment], pen: f64) -> Rect {
    let half = pen / 2.0;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &((ax, ay), (bx, by)) in segs {
        x0 = x0.min(ax.min(bx));
        y0 = y0.min(ay.min(by));
        x1 = x1.max(ax.max(bx));
        y1 = y1.max(ay.max(by));
    }
    Rect::from_corners(
        (x0 - half).floor() as i32,
        (y0 - half).floor() as i32,
        (x1 + half).ceil() as i32 + 1,
        (y1 + half).ceil() as i32 + 1,
    )
}

/// Lay out a text line centred on local `(0, center_y)`; returns per-glyph
/// local segments and pen widths.
fn text_line(
    glyphs: &[font::GlyphShape],
    height: f64,
    gap: f64,
    center_y: f64,
    stroke_scale: f64,
) -> Vec<(Vec<Segment>, f64)> {
    let total: f64 =
        glyphs.iter().map(|g| g.advance * height).sum::<f64>() + gap * (glyphs.len().saturating_sub(1)) as f64;
    let mut x = -total / 2.0;
    let top = center_y - height / 2.0;
    glyphs
        .iter()
        .map(|g| {
            let segs = font::place(g, x, top, height);
            x += g.advance * height + gap;
            (segs, g.pen * height * stroke_scale)
        })
        .collect()
}

/// Draw `spec` centred at `(cx, cy)`.
pub fn draw_sign(canvas: &mut Canvas, spec: &SignSpec, cx: f64, cy: f64) -> SignLayout {
    let tilt = spec.tilt_deg.to_radians();
    let place = Placement {
        cx,
        cy,
        sin: tilt.sin(),
        cos: tilt.cos(),
    };
    let (ink, face) = spec.contrast;
    let digits = spec.digits();
    let shapes: Vec<font::GlyphShape> = digits.iter().map(|&d| font::digit(d, spec.variant)).collect();
    let (w, h) = spec.extent();
    let mut glyph_boxes = Vec::with_capacity(digits.len());
    let draw_text = |canvas: &mut Canvas, line: Vec<(Vec<Segment>, f64)>, boxes: Option<&mut Vec<Rect>>| {
        let mut boxes = boxes;
        for (segs, pen) in line {
            let mapped = place.map_segments(&segs);
            canvas.stroke(&mapped, pen, ink);
            if let Some(b) = boxes.as_deref_mut() {
                b.push(ink_box(&mapped, pen));
            }
        }
    };

    match spec.mode {
        RegionMode::Eu => {
            let r = spec.scale / 2.0;
            let rim = ink + 0.3 * (face - ink);
            canvas.fill_disc(cx, cy, r, rim);
            canvas.fill_disc(cx, cy, EU_RIM_INNER * r, face);
            let mut height = if digits.len() >= 3 { 0.62 * r } else { 0.72 * r };
            let width_of = |hgt: f64| {
                shapes.iter().map(|g| g.advance * hgt).sum::<f64>() + 0.1 * hgt * (shapes.len() - 1) as f64
            };
            let max_width = 1.0 * r;
            if width_of(height) > max_width {
                height *= max_width / width_of(height);
            }
            let line = text_line(&shapes, height, 0.1 * height, 0.0, spec.stroke_scale);
            draw_text(canvas, line, Some(&mut glyph_boxes));
            let bbox = Rect::from_corners(
                (cx - r).floor() as i32,
                (cy - r).floor() as i32,
                (cx + r).ceil() as i32 + 1,
                (cy + r).ceil() as i32 + 1,
            );
            SignLayout {
                kind: ShapeKind::Circle,
                center: (cx, cy),
                size: (r, r),
                bbox,
                digits,
                glyph_boxes,
                header_box: None,
            }
        }
        RegionMode::Us => {
            canvas.fill_rotated_rect(cx, cy, w, h, tilt, face);
            let pen = (0.03 * w).max(1.0);
            let inset = 0.07 * w + pen / 2.0;
            let (bx, by) = (w / 2.0 - inset, h / 2.0 - inset);
            let border: Vec<Segment> = vec![
                ((-bx, -by), (bx, -by)),
                ((bx, -by), (bx, by)),
                ((bx, by), (-bx, by)),
                ((-bx, by), (-bx, -by)),
            ];
            canvas.stroke(&place.map_segments(&border), pen, ink);
            let letter_h = 0.12 * h;
            for (k, text) in spec.legend.lines().iter().enumerate() {
                let letters: Vec<font::GlyphShape> = text.chars().map(font::letter).collect();
                let center_y = -h / 2.0 + if k == 0 { 0.164 } else { 0.33 } * h;
                let line = text_line(&letters, letter_h, 0.22 * letter_h, center_y, 1.0);
                draw_text(canvas, line, None);
            }
            let height = 0.36 * h;
            let line = text_line(&shapes, height, 0.12 * height, -h / 2.0 + 0.696 * h, spec.stroke_scale);
            draw_text(canvas, line, Some(&mut glyph_boxes));
            let bbox = Rect::from_corners(
                (cx - w / 2.0).round() as i32,
                (cy - h / 2.0).round() as i32,
                (cx + w / 2.0).round() as i32,
                (cy + h / 2.0).round() as i32,
            );
            let header_box = ShapeCandidate::from_rect(&RectCandidate {
                x: bbox.x,
                y: bbox.y,
                w: bbox.w,
                h: bbox.h,
                score: 1.0,
            })
            .header;
            SignLayout {
                kind: ShapeKind::Rectangle,
                center: (cx, cy),
                size: (w, h),
                bbox,
                digits,
                glyph_boxes,
                header_box,
            }
        }
    }
}

/// Background luminance of standalone sign patches.
pub const PATCH_BACKGROUND: f64 = 110.0;

/// Render one sign centred on a plain patch with a margin around it.
pub fn render_sign(spec: &SignSpec) -> Result<RenderedSign> {
    spec.validate()?;
    let (w, h) = spec.extent();
    let margin = (0.15 * spec.scale).max(6.0);
    let pw = (w + 2.0 * margin).ceil() as usize;
    let ph = (h + 2.0 * margin).ceil() as usize;
    let mut canvas = Canvas::new(pw, ph, PATCH_BACKGROUND);
    let layout = draw_sign(&mut canvas, spec, (pw as f64 - 1.0) / 2.0, (ph as f64 - 1.0) / 2.0);
    Ok(RenderedSign {
        patch: canvas.to_frame(spec.noise_sigma, spec.seed),
        layout,
    })
}
