//! Embedded vector-stroke font: digits in three variants plus the capital
//! letters used on rectangular sign legends.
//!
//! Glyphs are centre-line polylines in a unit box (`u` right, `v` down, both
//! in `[0, 1]`), drawn with a round pen whose width is a fraction of the
//! glyph height.

use std::f64::consts::PI;

pub type Polyline = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphShape {
    /// Glyph width over glyph height.
    pub advance: f64,
    /// Pen width over glyph height.
    pub pen: f64,
    pub strokes: Vec<Polyline>,
}

pub const VARIANTS: u8 = 3;

/// Points of an axis-aligned ellipse arc; angles in degrees, `v` grows
/// downward so -90 is the top.
fn arc(cx: f64, cy: f64, rx: f64, ry: f64, from: f64, to: f64) -> Polyline {
    let steps = (((to - from).abs() / 12.0).ceil() as usize).max(2);
    (0..=steps)
        .map(|i| {
            let t = (from + (to - from) * i as f64 / steps as f64) * PI / 180.0;
            (cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect()
}

fn line(points: &[(f64, f64)]) -> Polyline {
    points.to_vec()
}

fn join(mut a: Polyline, b: Polyline) -> Polyline {
    a.extend(b);
    a
}

fn rotate_half_turn(strokes: Vec<Polyline>) -> Vec<Polyline> {
    strokes
        .into_iter()
        .map(|s| s.into_iter().map(|(u, v)| (1.0 - u, 1.0 - v)).collect())
        .collect()
}

fn six(variant: u8) -> Vec<Polyline> {
    let top = if variant == 2 { 300.0 } else { 320.0 };
    let loop_ry = if variant == 1 { 0.34 } else { 0.31 };
    let loop_cy = 1.0 - loop_ry;
    vec![
        join(arc(0.5, 0.5, 0.5, 0.5, top, 180.0), line(&[(0.0, loop_cy)])),
        arc(0.5, loop_cy, 0.5, loop_ry, 0.0, 360.0),
    ]
}

pub fn digit(d: u8, variant: u8) -> GlyphShape {
    let variant = variant % VARIANTS;
    let (advance, pen) = match variant {
        0 => (0.56, 0.14),
        1 => (0.62, 0.17),
        _ => (0.48, 0.13),
    };
    let strokes: Vec<Polyline> = match d {
        0 => vec![arc(0.5, 0.5, 0.5, 0.5, 0.0, 360.0)],
        1 => {
            let mut s = vec![line(&[(0.15, 0.28), (0.62, 0.0), (0.62, 1.0)])];
            if variant == 2 {
                s.push(line(&[(0.12, 1.0), (1.0, 1.0)]));
            }
            s
        }
        2 => {
            let mut upper = arc(0.5, 0.3, 0.5, 0.3, 180.0, 380.0);
            upper.extend([(0.0, 1.0), (1.0, 1.0)]);
            vec![upper]
        }
        3 => {
            if variant == 2 {
                vec![
                    line(&[(0.0, 0.0), (1.0, 0.0), (0.45, 0.42)]),
                    arc(0.48, 0.7, 0.52, 0.3, -90.0, 150.0),
                ]
            } else {
                vec![
                    arc(0.5, 0.25, 0.46, 0.25, -160.0, 90.0),
                    arc(0.5, 0.73, 0.5, 0.27, -90.0, 160.0),
                ]
            }
        }
        4 => {
            if variant == 2 {
                vec![
                    line(&[(0.35, 0.0), (0.0, 0.7), (1.0, 0.7)]),
                    line(&[(0.75, 0.35), (0.75, 1.0)]),
                ]
            } else {
                vec![line(&[(0.75, 1.0), (0.75, 0.0), (0.0, 0.7), (1.0, 0.7)])]
            }
        }
        5 => {
            let bowl_ry = if variant == 1 { 0.33 } else { 0.3 };
            vec![join(
                line(&[(0.95, 0.0), (0.12, 0.0), (0.05, 0.47)]),
                arc(0.5, 1.0 - bowl_ry, 0.5, bowl_ry, -150.0, 150.0),
            )]
        }
        6 => six(variant),
        7 => {
            if variant == 1 {
                vec![line(&[(0.0, 0.0), (1.0, 0.0), (0.5, 0.5), (0.42, 1.0)])]
            } else {
                vec![line(&[(0.0, 0.0), (1.0, 0.0), (0.35, 1.0)])]
            }
        }
        8 => vec![
            arc(0.5, 0.25, 0.42, 0.25, 0.0, 360.0),
            arc(0.5, 0.73, 0.5, 0.27, 0.0, 360.0),
        ],
        _ => rotate_half_turn(six(variant)),
    };
    let advance = if d == 1 { advance * 0.65 } else { advance };
    GlyphShape {
        advance,
        pen,
        strokes,
    }
}

/// Capital letters for legends; unknown characters render as blank space.
pub fn letter(c: char) -> GlyphShape {
    let bowl = |cy: f64, ry: f64| arc(0.55, cy, 0.45, ry, -90.0, 90.0);
    let (advance, strokes): (f64, Vec<Polyline>) = match c {
        'S' => (
            0.62,
            vec![join(
                arc(0.5, 0.26, 0.5, 0.26, -30.0, -270.0),
                arc(0.5, 0.74, 0.5, 0.26, -90.0, 150.0),
            )],
        ),
        'P' => (
            0.62,
            vec![join(line(&[(0.0, 1.0), (0.0, 0.0), (0.55, 0.0)]), join(bowl(0.26, 0.26), line(&[(0.0, 0.52)])))],
        ),
        'R' => (
            0.64,
            vec![
                join(line(&[(0.0, 1.0), (0.0, 0.0), (0.55, 0.0)]), join(bowl(0.26, 0.26), line(&[(0.0, 0.52)]))),
                line(&[(0.45, 0.52), (1.0, 1.0)]),
            ],
        ),
        'E' => (
            0.55,
            vec![
                line(&[(1.0, 0.0), (0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]),
                line(&[(0.0, 0.5), (0.8, 0.5)]),
            ],
        ),
        'D' => (
            0.64,
            vec![join(
                line(&[(0.45, 0.0), (0.0, 0.0), (0.0, 1.0), (0.45, 1.0)]),
                arc(0.45, 0.5, 0.55, 0.5, 90.0, -90.0),
            )],
        ),
        'L' => (0.52, vec![line(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)])]),
        'I' => (0.2, vec![line(&[(0.5, 0.0), (0.5, 1.0)])]),
        'M' => (
            0.8,
            vec![line(&[(0.0, 1.0), (0.0, 0.0), (0.5, 0.62), (1.0, 0.0), (1.0, 1.0)])],
        ),
        'T' => (
            0.6,
            vec![line(&[(0.0, 0.0), (1.0, 0.0)]), line(&[(0.5, 0.0), (0.5, 1.0)])],
        ),
        'U' => (
            0.62,
            vec![join(
                line(&[(0.0, 0.0), (0.0, 0.68)]),
                join(arc(0.5, 0.68, 0.5, 0.32, 180.0, 0.0), line(&[(1.0, 0.0)])),
            )],
        ),
        'C' => (0.62, vec![arc(0.55, 0.5, 0.55, 0.5, -45.0, -315.0)]),
        'K' => (
            0.62,
            vec![
                line(&[(0.0, 0.0), (0.0, 1.0)]),
                line(&[(1.0, 0.0), (0.0, 0.62)]),
                line(&[(0.3, 0.42), (1.0, 1.0)]),
            ],
        ),
        _ => (0.5, Vec::new()),
    };
    GlyphShape {
        advance,
        pen: 0.15,
        strokes,
    }
}

/// Centre-line segments of `shape` placed with its top-left ink corner at
/// `(x, y)` and the given ink height, in the caller's coordinate frame.
pub fn place(shape: &GlyphShape, x: f64, y: f64, height: f64) -> Vec<((f64, f64), (f64, f64))> {
    let pen = shape.pen * height;
    let width = shape.advance * height;
    // keep the pen's outer edge inside the nominal box
    let (sx, sy) = ((width - pen).max(0.0), (height - pen).max(0.0));
    let map = |(u, v): (f64, f64)| (x + pen / 2.0 + u * sx, y + pen / 2.0 + v * sy);
    let mut out = Vec::new();
    for s in &shape.strokes {
        for pair in s.windows(2) {
            out.push((map(pair[0]), map(pair[1])));
        }
        if s.len() == 1 {
            out.push((map(s[0]), map(s[0])));
        }
    }
    out
}
