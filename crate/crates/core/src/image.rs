//! Grayscale raster primitives: frames, PGM I/O, Sobel gradients, integral
//! images and adaptive thresholding.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Rect;

/// 8-bit luminance raster, row-major, 0 = black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    pub frame_index: u64,
    pub timestamp_ms: Option<u64>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension {
                width,
                height,
                reason: "width and height must be at least 1",
            });
        }
        if pixels.len() != width * height {
            return Err(Error::Shape {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(GrayFrame {
            width,
            height,
            pixels,
            frame_index: 0,
            timestamp_ms: None,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        GrayFrame::new(width, height, vec![value; width * height])
    }

    pub fn with_index(mut self, frame_index: u64) -> Self {
        self.frame_index = frame_index;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width as i32, self.height as i32)
    }

    pub fn check_region(&self, region: &Rect) -> Result<()> {
        if region.is_empty() || !region.fits_in(self.width, self.height) {
            return Err(Error::Bounds {
                region: [
                    region.x.into(),
                    region.y.into(),
                    region.w.into(),
                    region.h.into(),
                ],
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Copy of the pixels inside `region`.
    pub fn crop(&self, region: &Rect) -> Result<GrayFrame> {
        self.check_region(region)?;
        let (x0, y0) = (region.x as usize, region.y as usize);
        let (w, h) = (region.w as usize, region.h as usize);
        let mut out = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            out.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x0 + w]);
        }
        GrayFrame::new(w, h, out)
    }
}

/// Signed Sobel derivatives and their Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<i32>,
    pub gy: Vec<i32>,
    pub magnitude: Vec<f32>,
}

impl GradientField {
    pub fn zeros(width: usize, height: usize) -> Self {
        let n = width * height;
        GradientField {
            width,
            height,
            gx: vec![0; n],
            gy: vec![0; n],
            magnitude: vec![0.0; n],
        }
    }
}

/// Boolean raster; `true` marks foreground (ink).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryImage {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Shape {
                expected: width * height,
                got: bits.len(),
            });
        }
        Ok(BinaryImage {
            width,
            height,
            bits,
        })
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
}

/// Summed-area table with a zero guard row and column:
/// `at(x, y)` is the sum of all pixels strictly above and left of `(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<u64>,
}

impl IntegralImage {
    /// Table width (`frame width + 1`).
    pub fn stride(&self) -> usize {
        self.width + 1
    }

    pub fn source_size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u64 {
        self.table[y * (self.width + 1) + x]
    }

    /// Sum over `[x0, x1) x [y0, y1)` in four lookups.
    #[inline]
    pub fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        self.at(x1, y1) + self.at(x0, y0) - self.at(x1, y0) - self.at(x0, y1)
    }

    pub fn rect_sum(&self, r: &Rect) -> u64 {
        self.sum(
            r.x as usize,
            r.y as usize,
            r.right() as usize,
            r.bottom() as usize,
        )
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.table.chunks(self.width + 1)
    }
}

fn is_pgm_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    /// Skips whitespace and `#` comments running to end of line.
    fn skip_space(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if is_pgm_space(b) {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> &'a [u8] {
        let start = self.pos;
        while self.pos < self.data.len() && !is_pgm_space(self.data[self.pos]) {
            self.pos += 1;
        }
        &self.data[start..self.pos]
    }

    fn number(&mut self, what: &'static str) -> Result<u32> {
        self.skip_space();
        let tok = self.token();
        if tok.is_empty() {
            return Err(Error::Format {
                token: "<eof>".into(),
                reason: what,
            });
        }
        let text = String::from_utf8_lossy(tok).into_owned();
        if !tok.iter().all(u8::is_ascii_digit) {
            return Err(Error::Format {
                token: text,
                reason: what,
            });
        }
        text.parse().map_err(|_| Error::Format {
            token: text.clone(),
            reason: what,
        })
    }
}

/// Decode a binary PGM (P5, maxval 255) held in memory.
pub fn decode_pgm(data: &[u8]) -> Result<GrayFrame> {
    let mut cur = HeaderCursor { data, pos: 0 };
    let magic = cur.token();
    if magic != b"P5" {
        return Err(Error::Format {
            token: String::from_utf8_lossy(magic).into_owned(),
            reason: "expected magic P5",
        });
    }
    let width = cur.number("expected width")?;
    let height = cur.number("expected height")?;
    let maxval = cur.number("expected maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedDepth(maxval));
    }
    match data.get(cur.pos) {
        Some(&b) if is_pgm_space(b) => cur.pos += 1,
        _ => {
            return Err(Error::Format {
                token: "<eof>".into(),
                reason: "expected whitespace before pixel data",
            })
        }
    }
    let (w, h) = (width as usize, height as usize);
    let body = &data[cur.pos..];
    if body.len() < w * h {
        return Err(Error::Format {
            token: "<eof>".into(),
            reason: "pixel data truncated",
        });
    }
    GrayFrame::new(w, h, body[..w * h].to_vec())
}

pub fn encode_pgm(frame: &GrayFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.pixels);
    out
}

pub fn load_frame(path: impl AsRef<Path>) -> Result<GrayFrame> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&data)
}

pub fn save_frame(frame: &GrayFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(frame)).map_err(|e| Error::io(path, e))
}

/// 3x3 Sobel derivatives; the one-pixel rim is left at zero.
pub fn sobel(frame: &GrayFrame) -> Result<GradientField> {
    let (w, h) = (frame.width, frame.height);
    if w < 3 || h < 3 {
        return Err(Error::Dimension {
            width: w,
            height: h,
            reason: "sobel needs at least 3x3",
        });
    }
    let mut g = GradientField::zeros(w, h);
    let p = &frame.pixels;
    for y in 1..h - 1 {
        let r0 = &p[(y - 1) * w..y * w];
        let r1 = &p[y * w..(y + 1) * w];
        let r2 = &p[(y + 1) * w..(y + 2) * w];
        let row = y * w;
        for x in 1..w - 1 {
            let (a, b, c) = (i32::from(r0[x - 1]), i32::from(r0[x]), i32::from(r0[x + 1]));
            let (d, f) = (i32::from(r1[x - 1]), i32::from(r1[x + 1]));
            let (gg, hh, ii) = (i32::from(r2[x - 1]), i32::from(r2[x]), i32::from(r2[x + 1]));
            let gx = (c + 2 * f + ii) - (a + 2 * d + gg);
            let gy = (gg + 2 * hh + ii) - (a + 2 * b + c);
            let i = row + x;
            g.gx[i] = gx;
            g.gy[i] = gy;
            g.magnitude[i] = (gx as f32).hypot(gy as f32);
        }
    }
    Ok(g)
}

pub fn integral(frame: &GrayFrame) -> IntegralImage {
    integral_of(&frame.pixels, frame.width, frame.width, frame.height, 0, 0)
}

/// Integral table of the `w x h` window at `(x0, y0)` of a raster with row `stride`.
fn integral_of(
    pixels: &[u8],
    stride: usize,
    w: usize,
    h: usize,
    x0: usize,
    y0: usize,
) -> IntegralImage {
    let tw = w + 1;
    let mut table = vec![0u64; tw * (h + 1)];
    for y in 0..h {
        let src = &pixels[(y0 + y) * stride + x0..(y0 + y) * stride + x0 + w];
        let mut run = 0u64;
        for x in 0..w {
            run += u64::from(src[x]);
            table[(y + 1) * tw + x + 1] = table[y * tw + x + 1] + run;
        }
    }
    IntegralImage {
        width: w,
        height: h,
        table,
    }
}

/// Local-mean binarization of `region`; dark pixels become foreground.
///
/// A pixel is foreground iff its value is strictly below the mean of its
/// `window x window` neighbourhood minus `offset`. Neighbourhoods are clipped
/// to the region and the mean is taken over the pixels actually covered.
pub fn adaptive_threshold(
    frame: &GrayFrame,
    region: &Rect,
    window: usize,
    offset: i32,
) -> Result<BinaryImage> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "threshold window must be odd and >= 3, got {window}"
        )));
    }
    frame.check_region(region)?;
    let (rx, ry) = (region.x as usize, region.y as usize);
    let (rw, rh) = (region.w as usize, region.h as usize);
    let table = integral_of(&frame.pixels, frame.width, rw, rh, rx, ry);
    let half = window / 2;
    let mut out = BinaryImage::new(rw, rh);
    for y in 0..rh {
        let y0 = y.saturating_sub(half);
        let y1 = (y + half + 1).min(rh);
        let src = &frame.pixels[(ry + y) * frame.width + rx..];
        for x in 0..rw {
            let x0 = x.saturating_sub(half);
            let x1 = (x + half + 1).min(rw);
            let count = ((x1 - x0) * (y1 - y0)) as i64;
            let sum = table.sum(x0, y0, x1, y1) as i64;
            let v = i64::from(src[x]);
            // v < sum/count - offset, kept in integers
            out.bits[y * rw + x] = (v + i64::from(offset)) * count < sum;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_two_by_two() {
        let mut data = b"P5\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[0, 255, 128, 64]);
        let f = decode_pgm(&data).unwrap();
        assert_eq!((f.width(), f.height()), (2, 2));
        assert_eq!(f.pixels(), &[0, 255, 128, 64]);
    }

    #[test]
    fn ascii_pgm_is_rejected() {
        let err = decode_pgm(b"P2\n2 2\n255\n0 1 2 3\n").unwrap_err();
        match err {
            Error::Format { token, .. } => assert_eq!(token, "P2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_errors_name_the_token() {
        let err = decode_pgm(b"P5\n2 x2\n255\n....").unwrap_err();
        assert!(matches!(err, Error::Format { ref token, .. } if token == "x2"), "{err}");
        let err = decode_pgm(b"P5\n2 2\n65535\n........").unwrap_err();
        assert!(matches!(err, Error::UnsupportedDepth(65535)));
        let err = decode_pgm(b"P5\n2 2\n255\n\x01").unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn comment_after_magic_is_tolerated() {
        let mut data = b"P5\n# made by hand\n1 1\n255\n".to_vec();
        data.push(42);
        assert_eq!(decode_pgm(&data).unwrap().pixels(), &[42]);
    }

    #[test]
    fn sobel_rejects_tiny_frames() {
        let f = GrayFrame::filled(2, 5, 0).unwrap();
        assert!(matches!(sobel(&f), Err(Error::Dimension { .. })));
    }

    #[test]
    fn sobel_flat_and_step() {
        let flat = GrayFrame::filled(8, 6, 77).unwrap();
        let g = sobel(&flat).unwrap();
        assert!(g.gx.iter().chain(&g.gy).all(|&v| v == 0));

        let (w, h) = (10, 7);
        let px = (0..w * h).map(|i| if i % w < w / 2 { 0 } else { 255 }).collect();
        let g = sobel(&GrayFrame::new(w, h, px).unwrap()).unwrap();
        assert!(g.gy.iter().all(|&v| v == 0));
        let max = *g.gx.iter().max().unwrap();
        assert_eq!(max, 4 * 255);
        for y in 1..h - 1 {
            assert_eq!(g.gx[y * w + w / 2 - 1], max);
            assert_eq!(g.gx[y * w + w / 2], max);
            assert_eq!(g.gx[y * w + 1], 0);
        }
    }

    #[test]
    fn integral_small_cases() {
        let ones = GrayFrame::filled(4, 4, 1).unwrap();
        let t = integral(&ones);
        assert_eq!(t.sum(0, 0, 4, 4), 16);
        let seven = GrayFrame::new(1, 1, vec![7]).unwrap();
        let rows: Vec<Vec<u64>> = integral(&seven).rows().map(|r| r.to_vec()).collect();
        assert_eq!(rows, vec![vec![0, 0], vec![0, 7]]);
    }

    #[test]
    fn integral_does_not_overflow_at_4k() {
        let f = GrayFrame::filled(4096, 4096, 255).unwrap();
        let t = integral(&f);
        assert_eq!(t.sum(0, 0, 4096, 4096), 4096 * 4096 * 255);
    }

    #[test]
    fn threshold_uniform_region_is_background() {
        let f = GrayFrame::filled(20, 20, 140).unwrap();
        let b = adaptive_threshold(&f, &Rect::new(2, 2, 15, 12), 5, 3).unwrap();
        assert_eq!((b.width, b.height), (15, 12));
        assert_eq!(b.count(), 0);
    }

    #[test]
    fn threshold_dark_square() {
        let mut f = GrayFrame::filled(24, 24, 255).unwrap();
        for y in 10..14 {
            for x in 8..12 {
                f.set(x, y, 0);
            }
        }
        let b = adaptive_threshold(&f, &f.bounds(), 9, 10).unwrap();
        for y in 0..24 {
            for x in 0..24 {
                let inside = (8..12).contains(&x) && (10..14).contains(&y);
                assert_eq!(b.get(x, y), inside, "({x},{y})");
            }
        }
    }

    #[test]
    fn threshold_argument_and_bounds_errors() {
        let f = GrayFrame::filled(10, 10, 0).unwrap();
        assert!(matches!(
            adaptive_threshold(&f, &f.bounds(), 4, 0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            adaptive_threshold(&f, &Rect::new(5, 5, 6, 2), 3, 0),
            Err(Error::Bounds { .. })
        ));
    }
}
