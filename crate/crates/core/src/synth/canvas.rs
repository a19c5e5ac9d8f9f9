//! Floating-point luminance canvas with anti-aliased primitives.
//! Pixel `(x, y)` samples the scene at the point `(x, y)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::GrayFrame;

pub type Segment = ((f64, f64), (f64, f64));

#[derive(Debug, Clone)]
pub struct Canvas {
    width: usize,
    height: usize,
    lum: Vec<f32>,
}

fn coverage(signed_distance: f64) -> f64 {
    (0.5 - signed_distance).clamp(0.0, 1.0)
}

fn segment_distance(px: f64, py: f64, ((ax, ay), (bx, by)): Segment) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (px - ax - t * dx).hypot(py - ay - t * dy)
}

impl Canvas {
    pub fn new(width: usize, height: usize, fill: f64) -> Self {
        Canvas {
            width,
            height,
            lum: vec![fill as f32; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        f64::from(self.lum[y * self.width + x])
    }

    /// Smooth low-frequency background: a base level plus a few plane waves.
    pub fn fill_texture(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: f64 = rng.random_range(70.0..160.0);
        self.lum.fill(base as f32);
        let mut col = vec![0.0f32; self.width];
        for _ in 0..4 {
            let wavelength: f64 = rng.random_range(90.0..420.0);
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let amp: f64 = rng.random_range(3.0..10.0);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let k = std::f64::consts::TAU / wavelength;
            let (kx, ky) = (k * angle.cos(), k * angle.sin());
            // sin(a + b) = sin a cos b + cos a sin b with a along x, b along y
            let (sx, cx): (Vec<f64>, Vec<f64>) = (0..self.width)
                .map(|x| {
                    let a = kx * x as f64 + phase;
                    (a.sin(), a.cos())
                })
                .unzip();
            for y in 0..self.height {
                let b = ky * y as f64;
                let (sb, cb) = (b.sin(), b.cos());
                for (x, c) in col.iter_mut().enumerate() {
                    *c = (amp * (sx[x] * cb + cx[x] * sb)) as f32;
                }
                let row = &mut self.lum[y * self.width..(y + 1) * self.width];
                for (p, c) in row.iter_mut().zip(&col) {
                    *p += c;
                }
            }
        }
    }

    #[inline]
    fn blend(&mut self, x: usize, y: usize, value: f64, alpha: f64) {
        if alpha <= 0.0 {
            return;
        }
        let p = &mut self.lum[y * self.width + x];
        *p = (f64::from(*p) * (1.0 - alpha) + value * alpha) as f32;
    }

    fn span(&self, lo: f64, hi: f64, limit: usize) -> std::ops::Range<usize> {
        let a = lo.floor().max(0.0) as usize;
        let b = (hi.ceil() + 1.0).clamp(0.0, limit as f64) as usize;
        a.min(b)..b
    }

    /// Paint every pixel whose signed distance (negative inside) is below
    /// half a pixel, within the given bounding box.
    pub fn paint_sdf(
        &mut self,
        bounds: (f64, f64, f64, f64),
        value: f64,
        sdf: impl Fn(f64, f64) -> f64,
    ) {
        let xs = self.span(bounds.0 - 1.0, bounds.2 + 1.0, self.width);
        let ys = self.span(bounds.1 - 1.0, bounds.3 + 1.0, self.height);
        for y in ys {
            for x in xs.clone() {
                let a = coverage(sdf(x as f64, y as f64));
                self.blend(x, y, value, a);
            }
        }
    }

    pub fn fill_disc(&mut self, cx: f64, cy: f64, r: f64, value: f64) {
        self.paint_sdf((cx - r, cy - r, cx + r, cy + r), value, |x, y| {
            (x - cx).hypot(y - cy) - r
        });
    }

    pub fn fill_ring(&mut self, cx: f64, cy: f64, r_outer: f64, r_inner: f64, value: f64) {
        self.paint_sdf(
            (cx - r_outer, cy - r_outer, cx + r_outer, cy + r_outer),
            value,
            |x, y| {
                let d = (x - cx).hypot(y - cy);
                (d - r_outer).max(r_inner - d)
            },
        );
    }

    /// Filled `w x h` rectangle centred at `(cx, cy)` and rotated by `angle` radians.
    pub fn fill_rotated_rect(&mut self, cx: f64, cy: f64, w: f64, h: f64, angle: f64, value: f64) {
        let (s, c) = angle.sin_cos();
        let ext = 0.5 * (w.abs() * c.abs() + h.abs() * s.abs()).max(w.abs() * s.abs() + h.abs() * c.abs());
        self.paint_sdf((cx - ext, cy - ext, cx + ext, cy + ext), value, |x, y| {
            let (dx, dy) = (x - cx, y - cy);
            let (u, v) = (c * dx + s * dy, -s * dx + c * dy);
            let qx = u.abs() - w / 2.0;
            let qy = v.abs() - h / 2.0;
            let outside = qx.max(0.0).hypot(qy.max(0.0));
            outside + qx.max(qy).min(0.0)
        });
    }

    /// Round-pen strokes of total width `pen`.
    pub fn stroke(&mut self, segments: &[Segment], pen: f64, value: f64) {
        if segments.is_empty() {
            return;
        }
        let half = pen / 2.0;
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for &((ax, ay), (bx, by)) in segments {
            x0 = x0.min(ax.min(bx));
            y0 = y0.min(ay.min(by));
            x1 = x1.max(ax.max(bx));
            y1 = y1.max(ay.max(by));
        }
        self.paint_sdf((x0 - half, y0 - half, x1 + half, y1 + half), value, |x, y| {
            segments
                .iter()
                .map(|&s| segment_distance(x, y, s))
                .fold(f64::MAX, f64::min)
                - half
        });
    }

    /// Quantize to 8 bits after adding Gaussian noise of the given sigma.
    pub fn to_frame(&self, noise_sigma: f64, seed: u64) -> GrayFrame {
        let mut pixels = Vec::with_capacity(self.lum.len());
        if noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0f32, noise_sigma as f32).expect("finite sigma");
            pixels.extend(
                self.lum
                    .iter()
                    .map(|&v| (v + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8),
            );
        } else {
            pixels.extend(self.lum.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8));
        }
        GrayFrame::new(self.width, self.height, pixels).expect("canvas dimensions are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_covers_its_area() {
        let mut c = Canvas::new(40, 40, 0.0);
        c.fill_disc(20.0, 20.0, 10.0, 1.0);
        let ink: f64 = (0..40).flat_map(|y| (0..40).map(move |x| (x, y))).map(|(x, y)| c.get(x, y)).sum();
        let area = std::f64::consts::PI * 100.0;
        assert!((ink - area).abs() / area < 0.02, "{ink} vs {area}");
    }

    #[test]
    fn noiseless_quantization_is_deterministic() {
        let mut c = Canvas::new(16, 8, 100.4);
        c.fill_texture(3);
        assert_eq!(c.to_frame(0.0, 1), c.to_frame(0.0, 2));
        assert_ne!(c.to_frame(5.0, 1), c.to_frame(5.0, 2));
    }
}
