//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsr_core::image::{integral, sobel};
use tsr_core::odr::mlp::evaluate_examples;
use tsr_core::odr::{save_model, train, MlpParams, RegionMode, TrainConfig};
use tsr_core::pipeline::{evaluate, frame_rows, read_jsonl, DetectionRow, EvalReport, Pipeline, PipelineConfig, RowKind, DEFAULT_MATCH_IOU};
use tsr_core::segment::label_components;
use tsr_core::shape::{DetectorConfig, ShapeKind};
use tsr_core::synth::{generate_digit_corpus, random_scenario, CorpusConfig, ScenarioParams, SequenceRenderer, TruthFrame, TruthSign};
use tsr_core::{BinaryImage, GrayFrame, Rect};

mod common;
use common::{
    brute_sum, check_tracker_properties, circle_case, circle_error, flood_fill, gradient_check, partition_of,
    random_stream, random_tracker_config, rect_case, rect_error, run_stream, sobel_oracle, train_models, Models,
};

const RATE_TOL: f64 = 1e-4;
const GRAD_REL_TOL: f64 = 1e-4;
const CIRCLE_TOL_PX: f64 = 2.0;
const RECT_TOL_PX: f64 = 3.0;
const TRAIN_ACC: f64 = 0.98;
const HELD_OUT_ACC: f64 = 0.95;
const MIN_SCDR: f64 = 0.90;
const MAX_MISCLASSIFIED: usize = 1;
const TARGET_FPS: f64 = 20.0;
const FLOOR_FPS: f64 = 10.0;
const NOISE_SIGMA: f64 = 8.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Fixture with the published counts: 250 correct, 29 missed, 2 read wrong,
/// pushed through the JSONL row format and the evaluator.
fn metric_arithmetic() -> Outcome {
    let (mut truth, mut lines) = (Vec::new(), String::new());
    for i in 0..281u32 {
        let bbox = Rect::new((i % 20) as i32 * 30, (i / 20) as i32 * 30, 24, 24);
        let first = u64::from(i) * 4;
        truth.push(TruthSign {
            sign_id: i,
            value: 50,
            frames: (first..first + 3).map(|frame| TruthFrame { frame, bbox }).collect(),
        });
        let value = match i {
            0..250 => Some(50),
            250..252 => Some(80),
            _ => continue,
        };
        let row = DetectionRow { frame: first + 1, kind: RowKind::Validated, shape: ShapeKind::Circle, bbox, value, confidence: 0.9 };
        lines.push_str(&row.to_line());
        lines.push('\n');
    }
    let rows: Vec<DetectionRow> = read_jsonl(lines.as_bytes()).unwrap();
    let (r, _) = evaluate(&rows, &truth, DEFAULT_MATCH_IOU);
    let pass = (r.total, r.correct, r.missed, r.misclassified, r.false_alarms) == (281, 250, 29, 2, 0)
        && (r.scdr - 0.8897).abs() <= RATE_TOL
        && (r.misclassification_rate - 0.0071).abs() <= RATE_TOL;
    outcome(pass, format!("SCDR {:.4}, misclassification rate {:.4}", r.scdr, r.misclassification_rate))
}

fn ccl_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let p = rng.random_range(0.1..0.7);
        let bits = (0..32 * 32).map(|_| rng.random_bool(p)).collect();
        let b = BinaryImage::from_bits(32, 32, bits).unwrap();
        if partition_of(&label_components(&b)) != flood_fill(&b) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of 1000 images differ"))
}

fn gradient_and_integral_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    for _ in 0..100 {
        let (w, h) = (rng.random_range(8..=64), rng.random_range(8..=64));
        let f = GrayFrame::new(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap();
        let g = sobel(&f).unwrap();
        let (gx, gy) = sobel_oracle(&f);
        let t = integral(&f);
        // every prefix from running row sums, then a handful of brute-force boxes
        let mut ok = g.gx == gx && g.gy == gy;
        let mut col = vec![0u64; w + 1];
        for y in 1..=h {
            let mut row = 0u64;
            for x in 1..=w {
                row += u64::from(f.get(x - 1, y - 1));
                col[x] += row;
                ok &= t.at(x, y) == col[x];
            }
        }
        for _ in 0..20 {
            let (xa, xb) = (rng.random_range(0..=w), rng.random_range(0..=w));
            let (ya, yb) = (rng.random_range(0..=h), rng.random_range(0..=h));
            let (x0, x1, y0, y1) = (xa.min(xb), xa.max(xb), ya.min(yb), ya.max(yb));
            ok &= t.sum(x0, y0, x1, y1) == brute_sum(&f, x0, y0, x1, y1);
        }
        bad += usize::from(!ok);
    }
    outcome(bad == 0, format!("{bad} of 100 frames differ"))
}

fn gradient_check_triples() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let sizes = [rng.random_range(1..=12), rng.random_range(1..=10), rng.random_range(1..=6)];
        let p = MlpParams::random(&sizes, 100 + i).unwrap();
        let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random()).collect();
        let t: Vec<f64> = (0..sizes[2]).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
        worst = worst.max(gradient_check(&p, &x, &t));
    }
    outcome(worst < GRAD_REL_TOL, format!("max relative error {worst:.2e}"))
}

fn detector_geometry() -> Outcome {
    let cfg = DetectorConfig::default();
    let (mut found, mut worst_c, mut worst_r) = (0, 0.0f64, 0.0f64);
    for seed in 0..100 {
        if let Some(e) = circle_error(&circle_case(5000 + seed), &cfg) {
            found += usize::from(e <= CIRCLE_TOL_PX);
            worst_c = worst_c.max(e);
        } else {
            worst_c = f64::INFINITY;
        }
        if let Some(e) = rect_error(&rect_case(6000 + seed), &cfg) {
            found += usize::from(e <= RECT_TOL_PX);
            worst_r = worst_r.max(e);
        } else {
            worst_r = f64::INFINITY;
        }
    }
    outcome(
        found == 200,
        format!("{found}/200 within tolerance, max error circle {worst_c:.2} px, rectangle {worst_r:.2} px"),
    )
}

/// Trains the digit network twice on the 5000-example corpus. The first
/// result feeds the end-to-end criterion.
fn odr_accuracy(models: &Models) -> Outcome {
    let cfg = CorpusConfig { n_per_class: 250, seed: 21, ..CorpusConfig::default() };
    let (again, _) = train(&generate_digit_corpus(&cfg).unwrap(), 10, &TrainConfig::default()).unwrap();
    // a corpus drawn from a seed training never saw
    let fresh_corpus = generate_digit_corpus(&CorpusConfig { seed: 31, ..cfg }).unwrap();
    let last = models.digit_report.last();
    let held = last.validation_accuracy.unwrap_or(0.0);
    let all: Vec<usize> = (0..fresh_corpus.len()).collect();
    let (_, fresh) = evaluate_examples(&models.digit, &fresh_corpus, &all).unwrap();
    let identical = save_model(&models.digit) == save_model(&again);
    let n = models.digit_report.train_examples + models.digit_report.validation_examples;
    outcome(
        n == 5000 && last.train_accuracy >= TRAIN_ACC && held >= HELD_OUT_ACC && fresh >= HELD_OUT_ACC && identical,
        format!(
            "{n} examples, train {:.4}, held-out {held:.4}, fresh corpus {fresh:.4}, identical rerun {identical}",
            last.train_accuracy
        ),
    )
}

fn run_scenario(models: &Models, params: &ScenarioParams, seed: u64, frames: &mut u64, busy: &mut Duration) -> EvalReport {
    let spec = random_scenario(params, seed).unwrap();
    let truth = spec.ground_truth();
    let renderer = SequenceRenderer::new(spec).unwrap();
    let mut p = Pipeline::new(PipelineConfig::new(params.mode), models.digit.clone(), Some(models.header.clone())).unwrap();
    let mut rows = Vec::new();
    for f in renderer.frames() {
        let t = Instant::now();
        let out = p.process_frame(&f).unwrap();
        *busy += t.elapsed();
        *frames += 1;
        rows.extend(frame_rows(&out));
    }
    evaluate(&rows, &truth, DEFAULT_MATCH_IOU).0
}

fn end_to_end(models: &Models) -> Outcome {
    let (mut frames, mut busy) = (0, Duration::ZERO);
    let sum = |r: EvalReport, acc: &mut (usize, usize, usize, usize)| {
        acc.0 += r.total;
        acc.1 += r.correct;
        acc.2 += r.misclassified;
        acc.3 += r.false_alarms;
    };
    let (mut signs, mut free) = ((0, 0, 0, 0), (0, 0, 0, 0));
    let eu_values = RegionMode::Eu.default_values();
    for i in 0..50u64 {
        let mut p = ScenarioParams::new(RegionMode::Eu);
        p.noise_sigma = NOISE_SIGMA;
        p.value = Some(eu_values[i as usize % eu_values.len()]);
        sum(run_scenario(models, &p, 7000 + i, &mut frames, &mut busy), &mut signs);

        let mut p = ScenarioParams::new(RegionMode::Us);
        p.noise_sigma = NOISE_SIGMA;
        p.truck_decoy = i % 2 == 1;
        sum(run_scenario(models, &p, 8000 + i, &mut frames, &mut busy), &mut signs);

        let mut p = ScenarioParams::new(if i % 2 == 0 { RegionMode::Eu } else { RegionMode::Us });
        p.noise_sigma = NOISE_SIGMA;
        p.sign_free = true;
        p.truck_decoy = true;
        p.distractors = 6;
        sum(run_scenario(models, &p, 9000 + i, &mut frames, &mut busy), &mut free);
    }
    let scdr = signs.1 as f64 / signs.0 as f64;
    outcome(
        scdr >= MIN_SCDR && signs.2 <= MAX_MISCLASSIFIED && signs.3 == 0 && free.3 == 0,
        format!(
            "SCDR {scdr:.3} ({}/{}), misclassified {}, false alarms {} on sign sequences and {} on sign-free",
            signs.1, signs.0, signs.2, signs.3, free.3
        ),
    )
}

/// Sustained rate of the processing stages alone; rendering is excluded.
fn throughput(models: &Models) -> Outcome {
    let (mut frames, mut busy) = (0, Duration::ZERO);
    for i in 0..8u64 {
        let mode = if i % 2 == 0 { RegionMode::Eu } else { RegionMode::Us };
        let mut p = ScenarioParams::new(mode);
        p.noise_sigma = NOISE_SIGMA;
        p.frames = 40;
        run_scenario(models, &p, 9500 + i, &mut frames, &mut busy);
    }
    let fps = frames as f64 / busy.as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let verdict = if fps >= TARGET_FPS { "meets target" } else { "below target, above hard floor" };
    outcome(
        fps >= FLOOR_FPS,
        format!("{fps:.1} fps over {frames} frames of 640x480 ({verdict}; single-threaded, {cores} core(s) available)"),
    )
}

fn tracker_properties() -> Outcome {
    let mut events = 0;
    for seed in 0..1000u64 {
        let cfg = random_tracker_config(seed);
        let stream = random_stream(seed);
        if let Err(msg) = check_tracker_properties(&stream, &cfg) {
            return outcome(false, format!("stream {seed}: {msg}"));
        }
        events += run_stream(&stream, &cfg).len();
    }
    outcome(true, format!("1000 streams, {events} validation events"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let took = t.elapsed();
        let pass = o.pass && took <= limit;
        failed += usize::from(!pass);
        println!(
            "{} criterion {n} {name}: {} [{:.2} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    };
    let s = Duration::from_secs;
    report(1, "metric arithmetic", s(1), &mut metric_arithmetic);
    report(2, "labeling vs flood fill", s(10), &mut ccl_equivalence);
    report(3, "sobel and integral vs oracles", s(5), &mut gradient_and_integral_equivalence);
    report(4, "gradient check", s(10), &mut gradient_check_triples);
    report(5, "detector geometry", s(60), &mut detector_geometry);
    let mut models = None;
    report(6, "digit recognition accuracy", s(300), &mut || {
        let m = models.insert(train_models(250, 21));
        odr_accuracy(m)
    });
    let models = models.expect("models trained");
    report(7, "end-to-end synthetic SCDR", s(600), &mut || end_to_end(&models));
    report(8, "throughput", s(120), &mut || throughput(&models));
    report(9, "tracker properties", s(10), &mut tracker_properties);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
