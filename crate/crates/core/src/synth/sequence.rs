//! Annotated approach sequences: a camera closing in on roadside signs
//! among sign-like clutter.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::canvas::Canvas;
use super::sign::{draw_sign, Legend, SignSpec};
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::image::{save_frame, GrayFrame};
use crate::odr::RegionMode;

/// Perspective approach: the object sits at `foe + offset * (s / s0)` where
/// `s` grows geometrically from `scale.0` to `scale.1` over the motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approach {
    /// Focus of expansion in pixels.
    pub foe: (f64, f64),
    /// Offset from the focus of expansion at the starting scale.
    pub offset: (f64, f64),
    pub scale: (f64, f64),
    pub first_frame: u64,
    pub frames: u64,
}

impl Approach {
    /// Scale and centre at `frame`, or `None` outside the motion.
    pub fn at(&self, frame: u64) -> Option<(f64, (f64, f64))> {
        if frame < self.first_frame || frame >= self.first_frame + self.frames {
            return None;
        }
        let t = if self.frames > 1 {
            (frame - self.first_frame) as f64 / (self.frames - 1) as f64
        } else {
            0.0
        };
        let s = self.scale.0 * (self.scale.1 / self.scale.0).powf(t);
        let k = s / self.scale.0;
        Some((s, (self.foe.0 + self.offset.0 * k, self.foe.1 + self.offset.1 * k)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSign {
    /// `spec.scale` is ignored; the approach sets the per-frame size.
    pub spec: SignSpec,
    pub motion: Approach,
}

impl ScenarioSign {
    /// Only speed-limit signs are ground truth; TRUCK SPEED plates are decoys.
    pub fn is_truth(&self) -> bool {
        self.spec.mode == RegionMode::Eu || self.spec.legend == Legend::SpeedLimit
    }

    fn spec_at(&self, scale: f64) -> SignSpec {
        SignSpec {
            scale,
            ..self.spec.clone()
        }
    }

    fn bbox_at(&self, frame: u64) -> Option<Rect> {
        let (s, (cx, cy)) = self.motion.at(frame)?;
        let (w, h) = self.spec_at(s).extent();
        Some(Rect::from_corners(
            (cx - w / 2.0).floor() as i32 - 1,
            (cy - h / 2.0).floor() as i32 - 1,
            (cx + w / 2.0).ceil() as i32 + 2,
            (cy + h / 2.0).ceil() as i32 + 2,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistractorShape {
    /// Dark ring around a light disc: an empty circular sign.
    Ring,
    Disc,
    /// Light rectangle with a dark border and no text.
    Panel,
    /// Light rectangle with thick horizontal bars.
    BarPanel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distractor {
    pub shape: DistractorShape,
    pub motion: Approach,
    pub dark: f64,
    pub light: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub width: usize,
    pub height: usize,
    pub frames: u64,
    pub background_seed: u64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub signs: Vec<ScenarioSign>,
    pub distractors: Vec<Distractor>,
}

/// Ground truth of one sign, in the truth JSONL row layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSign {
    pub sign_id: u32,
    pub value: u32,
    pub frames: Vec<TruthFrame>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthFrame {
    pub frame: u64,
    pub bbox: Rect,
}

impl TruthSign {
    pub fn first_frame(&self) -> Option<u64> {
        self.frames.first().map(|f| f.frame)
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.frames.last().map(|f| f.frame)
    }
}

/// Frames in which a sign must be fully visible for the scenario to be valid.
pub const MIN_VISIBLE_FRAMES: usize = 2;

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 32 || self.height < 32 {
            return Err(Error::Dimension {
                width: self.width,
                height: self.height,
                reason: "scenario frames must be at least 32x32",
            });
        }
        if self.frames == 0 {
            return Err(Error::Argument("scenario needs at least one frame".into()));
        }
        for (k, s) in self.signs.iter().enumerate() {
            SignSpec {
                scale: s.motion.scale.0.clamp(16.0, 240.0),
                ..s.spec.clone()
            }
            .validate()?;
            if !(s.motion.scale.0 >= 16.0 && s.motion.scale.1 <= 240.0) {
                return Err(Error::Argument(format!("sign {k}: scale range {:?} outside [16, 240]", s.motion.scale)));
            }
            let visible = (0..self.frames).filter(|&f| self.sign_visible(s, f).is_some()).count();
            if visible < MIN_VISIBLE_FRAMES {
                return Err(Error::Argument(format!(
                    "sign {k} is fully visible in {visible} frames, need {MIN_VISIBLE_FRAMES}"
                )));
            }
        }
        Ok(())
    }

    fn sign_visible(&self, sign: &ScenarioSign, frame: u64) -> Option<Rect> {
        sign.bbox_at(frame).filter(|b| b.fits_in(self.width, self.height))
    }

    /// Truth rows: every speed-limit sign with the frames where it is fully
    /// inside the image.
    pub fn ground_truth(&self) -> Vec<TruthSign> {
        self.signs
            .iter()
            .filter(|s| s.is_truth())
            .enumerate()
            .map(|(id, s)| TruthSign {
                sign_id: id as u32,
                value: s.spec.value,
                frames: (0..self.frames)
                    .filter_map(|f| self.sign_visible(s, f).map(|bbox| TruthFrame { frame: f, bbox }))
                    .collect(),
            })
            .collect()
    }
}

/// Renders frames of one scenario; the background is computed once.
pub struct SequenceRenderer {
    spec: ScenarioSpec,
    background: Canvas,
}

impl SequenceRenderer {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let mut background = Canvas::new(spec.width, spec.height, 0.0);
        background.fill_texture(spec.background_seed);
        Ok(SequenceRenderer { spec, background })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn frame(&self, index: u64) -> GrayFrame {
        let mut canvas = self.background.clone();
        for d in &self.spec.distractors {
            draw_distractor(&mut canvas, d, index);
        }
        for s in &self.spec.signs {
            if let Some((scale, (cx, cy))) = s.motion.at(index) {
                draw_sign(&mut canvas, &s.spec_at(scale), cx, cy);
            }
        }
        let noise_seed = self.spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index;
        canvas
            .to_frame(self.spec.noise_sigma, noise_seed)
            .with_index(index)
    }

    pub fn frames(&self) -> impl Iterator<Item = GrayFrame> + '_ {
        (0..self.spec.frames).map(|i| self.frame(i))
    }
}

fn draw_distractor(canvas: &mut Canvas, d: &Distractor, frame: u64) {
    let Some((s, (cx, cy))) = d.motion.at(frame) else {
        return;
    };
    let r = s / 2.0;
    match d.shape {
        DistractorShape::Ring => {
            canvas.fill_disc(cx, cy, r, d.dark);
            canvas.fill_disc(cx, cy, 0.78 * r, d.light);
        }
        DistractorShape::Disc => canvas.fill_disc(cx, cy, r, d.light),
        DistractorShape::Panel | DistractorShape::BarPanel => {
            let (w, h) = (0.8 * s, s);
            canvas.fill_rotated_rect(cx, cy, w, h, 0.0, d.light);
            let pen = (0.03 * w).max(1.0);
            let (bx, by) = (w / 2.0 - 0.07 * w - pen / 2.0, h / 2.0 - 0.07 * w - pen / 2.0);
            canvas.stroke(
                &[
                    ((cx - bx, cy - by), (cx + bx, cy - by)),
                    ((cx + bx, cy - by), (cx + bx, cy + by)),
                    ((cx + bx, cy + by), (cx - bx, cy + by)),
                    ((cx - bx, cy + by), (cx - bx, cy - by)),
                ],
                pen,
                d.dark,
            );
            if d.shape == DistractorShape::BarPanel {
                for k in 0..3 {
                    let y = cy - 0.25 * h + 0.25 * h * k as f64;
                    canvas.stroke(&[((cx - 0.25 * w, y), (cx + 0.25 * w, y))], 0.08 * h, d.dark);
                }
            }
        }
    }
}

/// Randomized approach scenarios used by tests, the CLI and benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub mode: RegionMode,
    /// `None` draws a random valid value.
    pub value: Option<u32>,
    /// No speed-limit sign at all: a negative sequence.
    pub sign_free: bool,
    /// Add a TRUCK SPEED plate (rectangular mode only).
    pub truck_decoy: bool,
    pub distractors: usize,
    pub frames: u64,
    pub noise_sigma: f64,
    pub width: usize,
    pub height: usize,
}

impl ScenarioParams {
    pub fn new(mode: RegionMode) -> Self {
        ScenarioParams {
            mode,
            value: None,
            sign_free: false,
            truck_decoy: false,
            distractors: 3,
            frames: 14,
            noise_sigma: 6.0,
            width: 640,
            height: 480,
        }
    }
}

fn random_sign_spec(rng: &mut ChaCha8Rng, mode: RegionMode, value: u32) -> SignSpec {
    let mut spec = SignSpec::new(mode, value, 40.0);
    spec.variant = rng.random_range(0..super::font::VARIANTS);
    spec.stroke_scale = rng.random_range(0.85..1.2);
    spec.tilt_deg = rng.random_range(-5.0..5.0);
    spec.contrast = (rng.random_range(20.0..60.0), rng.random_range(200.0..240.0));
    spec
}

/// Approach of an object on one side of the road, kept fully visible until
/// close to the end of the sequence.
fn random_approach(rng: &mut ChaCha8Rng, p: &ScenarioParams, side: f64, lane: f64) -> Approach {
    let s0 = rng.random_range(22.0..28.0);
    let s1 = rng.random_range(80.0..105.0);
    let k = s1 / s0;
    let foe = (
        p.width as f64 / 2.0 + rng.random_range(-20.0..20.0),
        p.height as f64 * 0.45 + rng.random_range(-15.0..15.0),
    );
    // final centre stays inside with half a sign of margin
    let max_dx = (p.width as f64 / 2.0 - s1 * 0.6 - 4.0) / k;
    let max_dy = (p.height as f64 * 0.45 - s1 * 0.6 - 4.0) / k;
    let dx = side * max_dx * rng.random_range(0.55..1.0);
    let dy = -lane * max_dy * rng.random_range(0.2..0.9);
    Approach {
        foe,
        offset: (dx, dy),
        scale: (s0, s1),
        first_frame: 0,
        frames: p.frames,
    }
}

fn bbox_path(m: &Approach, aspect: f64) -> Vec<Rect> {
    (m.first_frame..m.first_frame + m.frames)
        .filter_map(|f| m.at(f))
        .map(|(s, (cx, cy))| {
            let (w, h) = (s * aspect, s);
            Rect::from_corners(
                (cx - w / 2.0) as i32 - 6,
                (cy - h / 2.0) as i32 - 6,
                (cx + w / 2.0) as i32 + 6,
                (cy + h / 2.0) as i32 + 6,
            )
        })
        .collect()
}

/// Draw a scenario from `params` with every random choice taken from `seed`.
pub fn random_scenario(params: &ScenarioParams, seed: u64) -> Result<ScenarioSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = params.mode;
    let values = mode.default_values();
    let mut signs = Vec::new();
    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    if !params.sign_free {
        let value = match params.value {
            Some(v) => v,
            None => values[rng.random_range(0..values.len())],
        };
        signs.push(ScenarioSign {
            spec: random_sign_spec(&mut rng, mode, value),
            motion: random_approach(&mut rng, params, side, 1.0),
        });
    }
    if params.truck_decoy && mode == RegionMode::Us {
        let value = values[rng.random_range(0..values.len())];
        let mut spec = random_sign_spec(&mut rng, mode, value);
        spec.legend = Legend::TruckSpeed;
        signs.push(ScenarioSign {
            spec,
            motion: random_approach(&mut rng, params, -side, 1.0),
        });
    }
    let taken: Vec<Rect> = signs
        .iter()
        .flat_map(|s| bbox_path(&s.motion, s.spec.extent().0 / s.spec.extent().1))
        .collect();

    let mut distractors: Vec<Distractor> = Vec::new();
    let mut placed: Vec<Rect> = taken.clone();
    let shapes = [
        DistractorShape::Ring,
        DistractorShape::Disc,
        DistractorShape::Panel,
        DistractorShape::BarPanel,
    ];
    let mut tries = 0;
    while distractors.len() < params.distractors && tries < 200 {
        tries += 1;
        let shape = shapes[rng.random_range(0..shapes.len())];
        let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let lane = rng.random_range(-0.3..1.0);
        let mut motion = random_approach(&mut rng, params, dir, lane);
        let shrink: f64 = rng.random_range(0.6..1.0);
        motion.scale = (motion.scale.0 * shrink.max(0.75), motion.scale.1 * shrink);
        motion.offset.0 *= rng.random_range(0.3..1.0);
        let path = bbox_path(&motion, 1.0);
        if path.iter().any(|b| placed.iter().any(|t| !b.intersection(t).is_empty())) {
            continue;
        }
        placed.extend(path);
        distractors.push(Distractor {
            shape,
            motion,
            dark: rng.random_range(20.0..90.0),
            light: rng.random_range(180.0..240.0),
        });
    }

    let spec = ScenarioSpec {
        width: params.width,
        height: params.height,
        frames: params.frames,
        background_seed: rng.random(),
        noise_sigma: params.noise_sigma,
        seed: rng.random(),
        signs,
        distractors,
    };
    spec.validate()?;
    Ok(spec)
}

/// Write `frame_%06d.pgm` files and `truth.jsonl` into `dir`.
pub fn generate_sequence(spec: &ScenarioSpec, dir: &Path) -> Result<Vec<TruthSign>> {
    let renderer = SequenceRenderer::new(spec.clone())?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for frame in renderer.frames() {
        let path = dir.join(format!("frame_{:06}.pgm", frame.frame_index));
        save_frame(&frame, &path)?;
    }
    let truth = spec.ground_truth();
    write_truth(&truth, &dir.join("truth.jsonl"))?;
    Ok(truth)
}

pub fn write_truth(truth: &[TruthSign], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for t in truth {
        serde_json::to_writer(&mut out, t).expect("truth rows serialize");
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approach_grows_geometrically() {
        let a = Approach {
            foe: (100.0, 50.0),
            offset: (10.0, -5.0),
            scale: (20.0, 80.0),
            first_frame: 2,
            frames: 3,
        };
        assert!(a.at(1).is_none() && a.at(5).is_none());
        let (s, c) = a.at(3).unwrap();
        assert!((s - 40.0).abs() < 1e-9);
        assert_eq!(c, (120.0, 40.0));
    }

    #[test]
    fn sign_free_scenario_has_empty_truth() {
        let mut p = ScenarioParams::new(RegionMode::Eu);
        p.sign_free = true;
        p.distractors = 5;
        let s = random_scenario(&p, 9).unwrap();
        assert!(s.ground_truth().is_empty());
        assert!(!s.distractors.is_empty());
    }

    #[test]
    fn truck_decoy_is_not_truth() {
        let mut p = ScenarioParams::new(RegionMode::Us);
        p.truck_decoy = true;
        let s = random_scenario(&p, 4).unwrap();
        assert_eq!(s.signs.len(), 2);
        assert_eq!(s.ground_truth().len(), 1);
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = random_scenario(&ScenarioParams::new(RegionMode::Eu), 3).unwrap();
        let a = SequenceRenderer::new(s.clone()).unwrap();
        let b = SequenceRenderer::new(s).unwrap();
        assert_eq!(a.frame(5), b.frame(5));
        assert_eq!(a.frame(5).frame_index, 5);
    }
}
