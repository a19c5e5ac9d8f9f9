//! Turning network outputs into digits, digits into speed values, and the
//! legend check for rectangular signs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mlp::MlpParams;
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::image::GrayFrame;
use crate::segment::DigitGlyph;
use crate::shape::ShapeKind;

pub const DEFAULT_REJECT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MARGIN: f64 = 0.15;

pub const HEADER_WIDTH: usize = 48;
pub const HEADER_HEIGHT: usize = 16;
pub const HEADER_LEN: usize = HEADER_WIDTH * HEADER_HEIGHT;
/// Header network outputs: speed-limit legend, anything else.
pub const HEADER_OUTPUTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionMode {
    Eu,
    Us,
}

impl RegionMode {
    pub fn shape(&self) -> ShapeKind {
        match self {
            RegionMode::Eu => ShapeKind::Circle,
            RegionMode::Us => ShapeKind::Rectangle,
        }
    }

    pub fn default_values(&self) -> Vec<u32> {
        match self {
            RegionMode::Eu => vec![10, 20, 30, 40, 45, 50, 60, 70, 80, 90, 100, 110, 120, 130],
            RegionMode::Us => (2..=17).map(|k| k * 5).collect(),
        }
    }

    fn digit_counts(&self) -> &'static [usize] {
        match self {
            RegionMode::Eu => &[2, 3],
            RegionMode::Us => &[2],
        }
    }
}

impl FromStr for RegionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eu" => Ok(RegionMode::Eu),
            "us" => Ok(RegionMode::Us),
            other => Err(Error::Argument(format!("unknown region mode `{other}` (expected eu or us)"))),
        }
    }
}

impl fmt::Display for RegionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionMode::Eu => "eu",
            RegionMode::Us => "us",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DigitReading {
    pub digit: u8,
    pub confidence: f64,
}

/// One frame's reading of one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignHypothesis {
    pub frame_index: u64,
    pub bbox: Rect,
    pub value: u32,
    pub confidence: f64,
    pub kind: ShapeKind,
}

/// `None` is a rejection: the best output is below `reject_threshold` or
/// fails to beat the runner-up by `margin`.
pub fn classify_outputs(outputs: &[f64], reject_threshold: f64, margin: f64) -> Option<DigitReading> {
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut second = f64::NEG_INFINITY;
    for (i, &o) in outputs.iter().enumerate() {
        if o > best.1 {
            second = best.1;
            best = (i, o);
        } else if o > second {
            second = o;
        }
    }
    if outputs.is_empty() || best.1 < reject_threshold || best.1 - second < margin {
        return None;
    }
    Some(DigitReading {
        digit: best.0 as u8,
        confidence: best.1.clamp(0.0, 1.0),
    })
}

pub fn classify_glyph(
    params: &MlpParams,
    glyph: &DigitGlyph,
    reject_threshold: f64,
    margin: f64,
) -> Result<Option<DigitReading>> {
    let out = params.forward(&glyph.bitmap)?;
    Ok(classify_outputs(&out, reject_threshold, margin))
}

/// Concatenate left-to-right digits into a speed value.
///
/// Confidence is the geometric mean of the digit confidences. Any rejected
/// digit, an unexpected digit count or a value outside `valid` rejects the
/// whole sign. A lone digit is accepted only when it reads as 5 and 5 is a
/// configured value.
pub fn assemble_value(
    readings: &[Option<DigitReading>],
    mode: RegionMode,
    valid: &[u32],
) -> Option<(u32, f64)> {
    let digits: Vec<DigitReading> = readings.iter().copied().collect::<Option<Vec<_>>>()?;
    let single_five = digits.len() == 1 && digits[0].digit == 5 && valid.contains(&5);
    if !mode.digit_counts().contains(&digits.len()) && !single_five {
        return None;
    }
    let value = digits.iter().fold(0u32, |v, d| v * 10 + u32::from(d.digit));
    if !valid.contains(&value) {
        return None;
    }
    let log_mean = digits.iter().map(|d| d.confidence.max(1e-300).ln()).sum::<f64>() / digits.len() as f64;
    Some((value, log_mean.exp().clamp(0.0, 1.0)))
}

/// Header crop resampled to `HEADER_WIDTH x HEADER_HEIGHT` by box averaging,
/// contrast-stretched so that 1.0 is the darkest ink. Low-contrast crops
/// map to all zeros.
pub fn header_features(frame: &GrayFrame, region: &Rect) -> Result<Vec<f64>> {
    frame.check_region(region)?;
    let (rw, rh) = (region.w as f64, region.h as f64);
    let mut cells = vec![0.0; HEADER_LEN];
    for v in 0..HEADER_HEIGHT {
        let y0 = f64::from(region.y) + rh * v as f64 / HEADER_HEIGHT as f64;
        let y1 = f64::from(region.y) + rh * (v + 1) as f64 / HEADER_HEIGHT as f64;
        for u in 0..HEADER_WIDTH {
            let x0 = f64::from(region.x) + rw * u as f64 / HEADER_WIDTH as f64;
            let x1 = f64::from(region.x) + rw * (u + 1) as f64 / HEADER_WIDTH as f64;
            cells[v * HEADER_WIDTH + u] = box_mean(frame, x0, y0, x1, y1);
        }
    }
    let max = cells.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = cells.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min < 24.0 {
        return Ok(vec![0.0; HEADER_LEN]);
    }
    Ok(cells.iter().map(|c| (max - c) / (max - min)).collect())
}

/// Area-weighted mean luminance over the real-valued box `[x0,x1) x [y0,y1)`.
fn box_mean(frame: &GrayFrame, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let (mut sum, mut weight) = (0.0, 0.0);
    let ys = y0.floor() as usize;
    let ye = (y1.ceil() as usize).min(frame.height());
    let xs = x0.floor() as usize;
    let xe = (x1.ceil() as usize).min(frame.width());
    for y in ys..ye {
        let wy = ((y + 1) as f64).min(y1) - (y as f64).max(y0);
        if wy <= 0.0 {
            continue;
        }
        for x in xs..xe {
            let wx = ((x + 1) as f64).min(x1) - (x as f64).max(x0);
            if wx <= 0.0 {
                continue;
            }
            sum += wx * wy * f64::from(frame.get(x, y));
            weight += wx * wy;
        }
    }
    if weight > 0.0 {
        sum / weight
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeaderCheck {
    pub accept: bool,
    pub confidence: f64,
}

/// Accept the legend above the digits iff the speed-limit output wins and
/// reaches 0.5.
pub fn us_header_check(params: &MlpParams, frame: &GrayFrame, header_region: &Rect) -> Result<HeaderCheck> {
    if params.output_size() != HEADER_OUTPUTS || params.input_size() != HEADER_LEN {
        return Err(Error::Shape {
            expected: HEADER_LEN,
            got: params.input_size(),
        });
    }
    let out = params.forward(&header_features(frame, header_region)?)?;
    Ok(HeaderCheck {
        accept: out[0] >= out[1] && out[0] >= 0.5,
        confidence: out[0],
    })
}
