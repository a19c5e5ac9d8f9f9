//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsr_core::odr::{train, MlpParams, SignHypothesis, TrainConfig, TrainReport};
use tsr_core::segment::Component;
use tsr_core::image::sobel;
use tsr_core::shape::{detect_circles, detect_shapes, DetectorConfig, ShapeKind};
use tsr_core::synth::{generate_digit_corpus, generate_header_corpus, Canvas, CorpusConfig};
use tsr_core::tracking::{Tracker, TrackerConfig, ValidatedSign};
use tsr_core::{BinaryImage, GrayFrame, Rect};

/// Textbook 3x3 correlation with the Sobel kernels; rim stays zero.
pub fn sobel_oracle(f: &GrayFrame) -> (Vec<i32>, Vec<i32>) {
    const KX: [[i32; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
    const KY: [[i32; 3]; 3] = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]];
    let (w, h) = (f.width(), f.height());
    let mut gx = vec![0; w * h];
    let mut gy = vec![0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (mut sx, mut sy) = (0, 0);
            for j in 0..3 {
                for i in 0..3 {
                    let v = i32::from(f.get(x + i - 1, y + j - 1));
                    sx += KX[j][i] * v;
                    sy += KY[j][i] * v;
                }
            }
            gx[y * w + x] = sx;
            gy[y * w + x] = sy;
        }
    }
    (gx, gy)
}

pub fn brute_sum(f: &GrayFrame, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
    let mut s = 0;
    for y in y0..y1 {
        for x in x0..x1 {
            s += u64::from(f.get(x, y));
        }
    }
    s
}

pub type Partition = BTreeSet<BTreeSet<(i32, i32)>>;

/// Breadth-first 8-connected flood fill.
pub fn flood_fill(b: &BinaryImage) -> Partition {
    let (w, h) = (b.width as i32, b.height as i32);
    let mut seen = vec![false; b.bits.len()];
    let mut out = Partition::new();
    for start in 0..b.bits.len() {
        if !b.bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([(start as i32 % w, start as i32 / w)]);
        while let Some((x, y)) = queue.pop_front() {
            comp.insert((x, y));
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let i = (ny * w + nx) as usize;
                    if b.bits[i] && !seen[i] {
                        seen[i] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
        }
        out.insert(comp);
    }
    out
}

pub fn partition_of(comps: &[Component]) -> Partition {
    comps.iter().map(|c| c.pixels().collect()).collect()
}

/// Largest relative error between backprop and central differences over
/// every weight and bias.
pub fn gradient_check(params: &MlpParams, input: &[f64], target: &[f64]) -> f64 {
    const H: f64 = 1e-5;
    let (_, g) = params.backprop(input, target).unwrap();
    let rel = |a: f64, n: f64| (a - n).abs() / (a.abs() + n.abs()).max(1e-7);
    let mut worst = 0.0f64;
    let mut p = params.clone();
    for l in 0..params.weights().len() {
        for i in 0..params.weights()[l].len() {
            let w0 = params.weights()[l][i];
            p.weights_mut()[l][i] = w0 + H;
            let up = p.loss(input, target).unwrap();
            p.weights_mut()[l][i] = w0 - H;
            let down = p.loss(input, target).unwrap();
            p.weights_mut()[l][i] = w0;
            worst = worst.max(rel(g.weights[l][i], (up - down) / (2.0 * H)));
        }
        for j in 0..params.biases()[l].len() {
            let b0 = params.biases()[l][j];
            p.biases_mut()[l][j] = b0 + H;
            let up = p.loss(input, target).unwrap();
            p.biases_mut()[l][j] = b0 - H;
            let down = p.loss(input, target).unwrap();
            p.biases_mut()[l][j] = b0;
            worst = worst.max(rel(g.biases[l][j], (up - down) / (2.0 * H)));
        }
    }
    worst
}

pub type Stream = Vec<(u64, Vec<SignHypothesis>)>;

/// A few drifting, growing objects with flickering values and dropouts,
/// plus scattered one-off hypotheses. Frame numbers skip now and then.
pub fn random_stream(seed: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = [30u32, 50, 80, 90];
    let n_obj = rng.random_range(0..4);
    let mut objs: Vec<(f64, f64, f64, u32, ShapeKind)> = (0..n_obj)
        .map(|_| {
            let kind = if rng.random_bool(0.5) { ShapeKind::Circle } else { ShapeKind::Rectangle };
            (
                rng.random_range(50.0..590.0),
                rng.random_range(50.0..430.0),
                rng.random_range(16.0..40.0),
                values[rng.random_range(0..values.len())],
                kind,
            )
        })
        .collect();
    let mut frame = rng.random_range(0..5u64);
    let mut out = Vec::new();
    for _ in 0..rng.random_range(1..30) {
        let mut hyps = Vec::new();
        for o in objs.iter_mut() {
            o.0 += rng.random_range(-3.0..3.0);
            o.1 += rng.random_range(-3.0..3.0);
            o.2 *= rng.random_range(1.0..1.12);
            if rng.random_bool(0.25) {
                continue;
            }
            let value = if rng.random_bool(0.2) { values[rng.random_range(0..values.len())] } else { o.3 };
            let s = o.2 as i32;
            hyps.push(SignHypothesis {
                frame_index: frame,
                bbox: Rect::new(o.0 as i32 - s / 2, o.1 as i32 - s / 2, s, s),
                value,
                confidence: rng.random_range(0.0..1.0),
                kind: o.4,
            });
        }
        if rng.random_bool(0.3) {
            let s = rng.random_range(12..60);
            hyps.push(SignHypothesis {
                frame_index: frame,
                bbox: Rect::new(rng.random_range(0..600), rng.random_range(0..440), s, s),
                value: values[rng.random_range(0..values.len())],
                confidence: rng.random_range(0.0..1.0),
                kind: ShapeKind::Circle,
            });
        }
        out.push((frame, hyps));
        frame += rng.random_range(1..3);
    }
    out
}

pub fn random_tracker_config(seed: u64) -> TrackerConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7472_6163);
    TrackerConfig {
        min_hits: rng.random_range(1..5),
        confidence_threshold: rng.random_range(0.0..3.0),
        max_gap: rng.random_range(0..4),
        ..TrackerConfig::default()
    }
}

pub fn run_stream(stream: &Stream, cfg: &TrackerConfig) -> Vec<ValidatedSign> {
    let mut t = Tracker::new(cfg.clone());
    stream
        .iter()
        .flat_map(|(f, h)| t.step(h, *f).unwrap())
        .collect()
}

/// Checks once-only emission, the hit floor, evidence monotonicity and
/// determinism on one stream. Returns a description of the first violation.
pub fn check_tracker_properties(stream: &Stream, cfg: &TrackerConfig) -> Result<(), String> {
    let mut tracker = Tracker::new(cfg.clone());
    let mut emitted = BTreeSet::new();
    let mut previous: Vec<tsr_core::tracking::Track> = Vec::new();
    let mut all = Vec::new();
    for (frame, hyps) in stream {
        let events = tracker.step(hyps, *frame).map_err(|e| e.to_string())?;
        for e in &events {
            if !emitted.insert(e.track_id) {
                return Err(format!("track {} emitted twice", e.track_id));
            }
            let t = tracker
                .tracks()
                .iter()
                .find(|t| t.track_id == e.track_id)
                .ok_or("event for an unknown track")?;
            let ev = t.evidence.get(&e.value).ok_or("event value has no evidence")?;
            if ev.hits < cfg.min_hits || ev.cumulative < cfg.confidence_threshold {
                return Err(format!("track {} validated with {:?}", e.track_id, ev));
            }
            if t.validated_value != Some(e.value) || e.frame_of_validation != *frame {
                return Err("event disagrees with track state".into());
            }
        }
        for t in tracker.tracks() {
            if let Some(p) = previous.iter().find(|p| p.track_id == t.track_id) {
                for (v, e) in &p.evidence {
                    let now = t.evidence.get(v).ok_or("evidence vanished")?;
                    if now.hits < e.hits || now.cumulative < e.cumulative {
                        return Err(format!("evidence for {v} decreased on track {}", t.track_id));
                    }
                }
                if p.validated_value.is_some() && t.validated_value != p.validated_value {
                    return Err("validated value changed".into());
                }
            }
            if t.evidence.values().any(|e| e.cumulative < 0.0) {
                return Err("negative cumulative confidence".into());
            }
        }
        previous = tracker.tracks().to_vec();
        all.extend(events);
    }
    if run_stream(stream, cfg) != all {
        return Err("replay produced different events".into());
    }
    // stricter settings may only drop validations
    let loose: BTreeSet<u64> = all.iter().map(|e| e.track_id).collect();
    for strict in [
        TrackerConfig { min_hits: cfg.min_hits + 1, ..cfg.clone() },
        TrackerConfig { confidence_threshold: cfg.confidence_threshold + 0.5, ..cfg.clone() },
    ] {
        let ids: BTreeSet<u64> = run_stream(stream, &strict).iter().map(|e| e.track_id).collect();
        if !ids.is_subset(&loose) {
            return Err(format!("stricter config validated more: {ids:?} vs {loose:?}"));
        }
    }
    Ok(())
}

/// Clean synthetic shape with its exact geometry.
#[derive(Debug, Clone)]
pub struct ShapeCase {
    pub frame: GrayFrame,
    pub center: (f64, f64),
    /// Radius for circles, (w, h) for rectangles.
    pub size: (f64, f64),
    pub tilt_deg: f64,
}

fn contrast_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let dark: f64 = rng.random_range(20.0..110.0);
    let light = (dark + rng.random_range(80.0..150.0)).min(250.0);
    if rng.random_bool(0.5) { (dark, light) } else { (light, dark) }
}

pub fn circle_case(seed: u64) -> ShapeCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: f64 = rng.random_range(10.0..=40.0);
    let n = (2.0 * r + 40.0).ceil() as usize;
    let (bg, fg) = contrast_pair(&mut rng);
    let c = (n as f64 / 2.0 + rng.random_range(-4.0..4.0), n as f64 / 2.0 + rng.random_range(-4.0..4.0));
    let mut canvas = Canvas::new(n, n, bg);
    canvas.fill_disc(c.0, c.1, r, fg);
    ShapeCase { frame: canvas.to_frame(0.0, 0), center: c, size: (r, r), tilt_deg: 0.0 }
}

pub fn rect_case(seed: u64) -> ShapeCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h: f64 = rng.random_range(24.0..150.0);
    let w = h * rng.random_range(0.63..0.92);
    let tilt = rng.random_range(-7.0..=7.0);
    let (bg, fg) = contrast_pair(&mut rng);
    let n = (h * 1.2 + 40.0).ceil() as usize;
    let c = (n as f64 / 2.0 + rng.random_range(-4.0..4.0), n as f64 / 2.0 + rng.random_range(-4.0..4.0));
    let mut canvas = Canvas::new(n, n, bg);
    canvas.fill_rotated_rect(c.0, c.1, w, h, f64::to_radians(tilt), fg);
    ShapeCase { frame: canvas.to_frame(0.0, 0), center: c, size: (w, h), tilt_deg: tilt }
}

/// Smallest center error among detected circles within 2 px of the radius.
pub fn circle_error(case: &ShapeCase, cfg: &DetectorConfig) -> Option<f64> {
    let grad = sobel(&case.frame).unwrap();
    detect_circles(&grad, cfg)
        .iter()
        .filter(|c| (c.radius - case.size.0).abs() <= 2.0)
        .map(|c| (c.cx - case.center.0).hypot(c.cy - case.center.1))
        .min_by(f64::total_cmp)
}

/// Smallest worst-corner error among detected rectangles. Corners are those
/// of the untilted outline.
pub fn rect_error(case: &ShapeCase, cfg: &DetectorConfig) -> Option<f64> {
    let grad = sobel(&case.frame).unwrap();
    let (cx, cy) = case.center;
    let (hw, hh) = (case.size.0 / 2.0, case.size.1 / 2.0);
    detect_shapes(&grad, ShapeKind::Rectangle, cfg)
        .iter()
        .map(|c| {
            let b = c.bbox;
            let e0 = (f64::from(b.x) - (cx - hw)).hypot(f64::from(b.y) - (cy - hh));
            let e1 = (f64::from(b.right()) - (cx + hw)).hypot(f64::from(b.bottom()) - (cy + hh));
            e0.max(e1)
        })
        .min_by(f64::total_cmp)
}

pub struct Models {
    pub digit: MlpParams,
    pub digit_report: TrainReport,
    pub header: MlpParams,
    pub header_report: TrainReport,
}

/// Digit and header networks trained on freshly generated corpora.
pub fn train_models(n_per_class: usize, seed: u64) -> Models {
    let digits = generate_digit_corpus(&CorpusConfig { n_per_class, seed, ..CorpusConfig::default() }).unwrap();
    let (digit, digit_report) = train(&digits, 10, &TrainConfig::default()).unwrap();
    let headers = generate_header_corpus(&CorpusConfig { n_per_class: n_per_class.max(100), seed: seed + 1, ..CorpusConfig::default() }).unwrap();
    let (header, header_report) = train(&headers, 2, &TrainConfig { hidden_size: 16, ..TrainConfig::default() }).unwrap();
    Models { digit, digit_report, header, header_report }
}
