//! Labeled training corpora produced by running the real detection and
//! segmentation stages over rendered signs.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::canvas::Canvas;
use super::sign::{draw_sign, Legend, SignLayout, SignSpec};
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::image::{sobel, GrayFrame};
use crate::odr::{header_features, Dataset, Label, RegionMode};
use crate::segment::{digit_components, label_components, normalize_glyph, segment_roi, SegmentConfig};
use crate::shape::{detect_shapes, CircleCandidate, DetectorConfig, RectCandidate, ShapeCandidate, ShapeKind};

/// Perturbation ranges shared by both corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n_per_class: usize,
    /// `None` mixes both sign families.
    pub mode: Option<RegionMode>,
    /// Sign scale range in pixels.
    pub scale: (f64, f64),
    pub max_tilt_deg: f64,
    pub noise_sigma: (f64, f64),
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_per_class: 250,
            mode: None,
            scale: (30.0, 110.0),
            max_tilt_deg: 8.0,
            noise_sigma: (0.0, 8.0),
            seed: 1,
        }
    }
}

impl CorpusConfig {
    fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::Argument("n_per_class must be at least 1".into()));
        }
        if !(self.scale.0 >= 16.0 && self.scale.1 <= 240.0 && self.scale.0 <= self.scale.1) {
            return Err(Error::Argument(format!("bad scale range {:?}", self.scale)));
        }
        if !(0.0..=15.0).contains(&self.max_tilt_deg) {
            return Err(Error::Argument("max_tilt_deg must lie in [0, 15]".into()));
        }
        if !(self.noise_sigma.0 >= 0.0 && self.noise_sigma.0 <= self.noise_sigma.1) {
            return Err(Error::Argument(format!("bad noise range {:?}", self.noise_sigma)));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn random_spec(rng: &mut ChaCha8Rng, cfg: &CorpusConfig, mode: RegionMode, value: u32) -> SignSpec {
    let mut spec = SignSpec::new(mode, value, uniform(rng, cfg.scale));
    spec.variant = rng.random_range(0..super::font::VARIANTS);
    spec.stroke_scale = rng.random_range(0.8..1.25);
    spec.tilt_deg = uniform(rng, (-cfg.max_tilt_deg, cfg.max_tilt_deg));
    spec.contrast = (rng.random_range(15.0..70.0), rng.random_range(190.0..245.0));
    spec.noise_sigma = uniform(rng, cfg.noise_sigma);
    spec.seed = rng.random();
    spec
}

/// A sign drawn on a textured patch, as it would appear in a sequence.
struct Scene {
    frame: GrayFrame,
    layout: SignLayout,
}

fn render_scene(rng: &mut ChaCha8Rng, spec: &SignSpec) -> Scene {
    let (w, h) = spec.extent();
    let margin = (0.25 * spec.scale).max(8.0);
    let pw = (w + 2.0 * margin).ceil() as usize;
    let ph = (h + 2.0 * margin).ceil() as usize;
    let mut canvas = Canvas::new(pw, ph, 0.0);
    canvas.fill_texture(rng.random());
    let cx = pw as f64 / 2.0 + rng.random_range(-1.0..1.0);
    let cy = ph as f64 / 2.0 + rng.random_range(-1.0..1.0);
    let layout = draw_sign(&mut canvas, spec, cx, cy);
    Scene {
        frame: canvas.to_frame(spec.noise_sigma, spec.seed),
        layout,
    }
}

/// Detected candidates centred on the sign, or a jittered stand-in built
/// from the true outline when the detector misses it.
fn sign_candidates(rng: &mut ChaCha8Rng, scene: &Scene, det: &DetectorConfig) -> Vec<ShapeCandidate> {
    let grad = match sobel(&scene.frame) {
        Ok(g) => g,
        Err(_) => return Vec::new(),
    };
    let (tx, ty) = scene.layout.center;
    let size = scene.layout.size.0.max(scene.layout.size.1);
    let found: Vec<ShapeCandidate> = detect_shapes(&grad, scene.layout.kind, det)
        .into_iter()
        .filter(|c| {
            let (cx, cy) = c.bbox.center();
            (cx - tx).hypot(cy - ty) <= 0.15 * size && c.bbox.w as f64 >= 0.6 * f64::from(scene.layout.bbox.w)
        })
        .collect();
    if !found.is_empty() {
        return found;
    }
    let jitter = |rng: &mut ChaCha8Rng| rng.random_range(-1.5..1.5);
    match scene.layout.kind {
        ShapeKind::Circle => {
            let radius = scene.layout.size.0 * rng.random_range(0.76..1.0);
            vec![ShapeCandidate::from_circle(&CircleCandidate {
                cx: tx + jitter(rng),
                cy: ty + jitter(rng),
                radius,
                score: 1.0,
            })]
        }
        ShapeKind::Rectangle => {
            let b = scene.layout.bbox;
            let (dx, dy) = (jitter(rng).round() as i32, jitter(rng).round() as i32);
            vec![ShapeCandidate::from_rect(&RectCandidate {
                x: b.x + dx,
                y: b.y + dy,
                w: b.w + jitter(rng).round() as i32,
                h: b.h + jitter(rng).round() as i32,
                score: 1.0,
            })]
        }
    }
}

/// Digit a segmented glyph box belongs to, by IoU >= 0.5 with a true box.
fn glyph_label(layout: &SignLayout, glyph_box: &Rect) -> Option<u8> {
    layout
        .glyph_boxes
        .iter()
        .zip(&layout.digits)
        .map(|(b, &d)| (b.iou(glyph_box), d))
        .filter(|(iou, _)| *iou >= 0.5)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, d)| d)
}

fn values_with_digit(mode: RegionMode, digit: u8) -> Vec<u32> {
    mode.default_values()
        .into_iter()
        .filter(|v| v.to_string().bytes().any(|b| b - b'0' == digit))
        .collect()
}

/// Non-sign clutter: blobs, partial rims, bars and bare texture.
fn clutter_patch(rng: &mut ChaCha8Rng, cfg: &CorpusConfig) -> GrayFrame {
    let size = uniform(rng, (cfg.scale.0 * 0.5, cfg.scale.1 * 0.6)).max(14.0);
    let n = size.ceil() as usize;
    let mut canvas = Canvas::new(n, n, 0.0);
    canvas.fill_texture(rng.random());
    let dark = rng.random_range(15.0..90.0);
    let light = rng.random_range(170.0..245.0);
    if rng.random_bool(0.5) {
        canvas.fill_rotated_rect(size / 2.0, size / 2.0, size, size, 0.0, light);
    }
    let c = size / 2.0;
    match rng.random_range(0..5) {
        0 => {
            for _ in 0..rng.random_range(1..4) {
                let r = size * rng.random_range(0.08..0.3);
                canvas.fill_disc(c + rng.random_range(-c..c) * 0.6, c + rng.random_range(-c..c) * 0.6, r, dark);
            }
        }
        1 => {
            // a rim arc entering the patch from outside
            let r = size * rng.random_range(0.5..1.2);
            let ang: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let (ox, oy) = (c + ang.cos() * r * 0.9, c + ang.sin() * r * 0.9);
            canvas.fill_ring(ox, oy, r, r * rng.random_range(0.75..0.9), dark);
        }
        2 => {
            for _ in 0..rng.random_range(1..4) {
                canvas.fill_rotated_rect(
                    c + rng.random_range(-c..c) * 0.6,
                    c + rng.random_range(-c..c) * 0.6,
                    size * rng.random_range(0.08..0.25),
                    size * rng.random_range(0.3..0.8),
                    rng.random_range(-1.6..1.6),
                    dark,
                );
            }
        }
        3 => {
            let r = size * rng.random_range(0.2..0.4);
            canvas.fill_ring(c, c, r, r * rng.random_range(0.4..0.75), dark);
        }
        _ => {}
    }
    canvas.to_frame(uniform(rng, cfg.noise_sigma).max(2.0), rng.random())
}

/// Balanced digit corpus: `n_per_class` glyphs of each digit plus
/// `10 * n_per_class` NEGATIVE glyphs, all 16x16 bitmaps from the real
/// segmentation path.
pub fn generate_digit_corpus(cfg: &CorpusConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let det = DetectorConfig::default();
    let seg = SegmentConfig::default();
    let n = cfg.n_per_class;
    let mut per_digit: Vec<Vec<Vec<f64>>> = vec![Vec::new(); 10];
    let mut negatives: Vec<Vec<f64>> = Vec::new();
    let modes = match cfg.mode {
        Some(m) => vec![m],
        None => vec![RegionMode::Eu, RegionMode::Us],
    };

    let mut attempts = 0usize;
    while per_digit.iter().any(|v| v.len() < n) {
        attempts += 1;
        if attempts > 200 * n + 1000 {
            return Err(Error::Argument("digit corpus generation is not converging".into()));
        }
        let need = (0..10u8).min_by_key(|&d| per_digit[d as usize].len()).unwrap_or(0);
        let mode_choices: Vec<RegionMode> = modes
            .iter()
            .copied()
            .filter(|&m| !values_with_digit(m, need).is_empty())
            .collect();
        let mode = *mode_choices.choose(&mut rng).unwrap_or(&RegionMode::Eu);
        let value = *values_with_digit(mode, need).choose(&mut rng).unwrap_or(&50);
        let spec = random_spec(&mut rng, cfg, mode, value);
        let scene = render_scene(&mut rng, &spec);
        for cand in sign_candidates(&mut rng, &scene, &det) {
            for glyph in segment_roi(&scene.frame, &cand, &seg)? {
                match glyph_label(&scene.layout, &glyph.source_bbox) {
                    Some(d) if per_digit[d as usize].len() < n => per_digit[d as usize].push(glyph.bitmap),
                    Some(_) => {}
                    None if negatives.len() < 3 * n => negatives.push(glyph.bitmap),
                    None => {}
                }
            }
        }
    }

    let target = 10 * n;
    let mut attempts = 0usize;
    while negatives.len() < target {
        attempts += 1;
        if attempts > 50 * target + 1000 {
            return Err(Error::Argument("negative corpus generation is not converging".into()));
        }
        let patch = clutter_patch(&mut rng, cfg);
        let region = patch.bounds();
        let mut comps = digit_components(&patch, &region, &seg)?;
        if comps.is_empty() {
            let binary = crate::image::adaptive_threshold(&patch, &region, seg.window_for(region.h as usize), seg.offset)?;
            comps = label_components(&binary);
            comps.sort_by_key(|c| std::cmp::Reverse(c.area));
            comps.truncate(1);
        }
        for c in comps.iter().filter(|c| c.area >= 4) {
            if negatives.len() < target {
                negatives.push(normalize_glyph(c, (0, 0)).bitmap);
            }
        }
    }

    let mut data = Dataset::default();
    for (d, glyphs) in per_digit.into_iter().enumerate() {
        for g in glyphs {
            data.push(g, Label::Class(d as u8))?;
        }
    }
    for g in negatives {
        data.push(g, Label::Negative)?;
    }
    Ok(data)
}

/// Header corpus for rectangular signs: `n_per_class` SPEED LIMIT legends as
/// class 0 and as many non-legends (TRUCK SPEED, blank bands, texture) as
/// class 1, in the header feature layout.
pub fn generate_header_corpus(cfg: &CorpusConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4845_4144);
    let det = DetectorConfig::default();
    let n = cfg.n_per_class;
    let us_values = RegionMode::Us.default_values();
    let mut data = Dataset::default();
    let (mut pos, mut neg) = (0usize, 0usize);
    let mut attempts = 0usize;
    while pos < n || neg < n {
        attempts += 1;
        if attempts > 100 * n + 1000 {
            return Err(Error::Argument("header corpus generation is not converging".into()));
        }
        let value = *us_values.choose(&mut rng).unwrap_or(&55);
        let mut spec = random_spec(&mut rng, cfg, RegionMode::Us, value);
        let kind = if pos < n && (neg >= n || rng.random_bool(0.5)) { 0 } else { 1 };
        if kind == 1 {
            match rng.random_range(0..3) {
                0 => spec.legend = Legend::TruckSpeed,
                1 => {
                    let patch = clutter_patch(&mut rng, cfg);
                    let feats = header_features(&patch, &Rect::new(0, 0, patch.width() as i32, patch.height() as i32 / 2))?;
                    data.push(feats, Label::Class(1))?;
                    neg += 1;
                    continue;
                }
                _ => spec.contrast.0 = spec.contrast.1,
            }
        }
        let scene = render_scene(&mut rng, &spec);
        let Some(cand) = sign_candidates(&mut rng, &scene, &det).into_iter().next() else {
            continue;
        };
        let Some(header) = cand.header.map(|h| h.intersection(&scene.frame.bounds())) else {
            continue;
        };
        if header.is_empty() {
            continue;
        }
        data.push(header_features(&scene.frame, &header)?, Label::Class(kind))?;
        if kind == 0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    Ok(data)
}
