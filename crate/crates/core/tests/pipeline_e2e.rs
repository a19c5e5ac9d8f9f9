use std::fs;
use std::sync::OnceLock;

use tsr_core::odr::RegionMode;
use tsr_core::pipeline::{
    evaluate, frame_rows, read_jsonl, run_sequence, DetectionRow, FrameOutput, Pipeline, PipelineConfig, RowKind,
    Sinks, DEFAULT_MATCH_IOU,
};
use tsr_core::synth::{generate_sequence, random_scenario, ScenarioParams, SequenceRenderer, TruthSign};
use tsr_core::Error;

mod common;
use common::{train_models, Models};

fn models() -> &'static Models {
    static MODELS: OnceLock<Models> = OnceLock::new();
    MODELS.get_or_init(|| train_models(150, 11))
}

fn pipeline(mode: RegionMode) -> Pipeline {
    let m = models();
    Pipeline::new(PipelineConfig::new(mode), m.digit.clone(), Some(m.header.clone())).unwrap()
}

fn run_in_memory(params: &ScenarioParams, seed: u64) -> (Vec<FrameOutput>, Vec<TruthSign>) {
    let spec = random_scenario(params, seed).unwrap();
    let truth = spec.ground_truth();
    let renderer = SequenceRenderer::new(spec).unwrap();
    let mut p = pipeline(params.mode);
    let outs = renderer.frames().map(|f| p.process_frame(&f).unwrap()).collect();
    (outs, truth)
}

fn rows_of(outs: &[FrameOutput]) -> Vec<DetectionRow> {
    outs.iter().flat_map(frame_rows).collect()
}

#[test]
fn eu70_approach_is_validated_in_time() {
    let mut params = ScenarioParams::new(RegionMode::Eu);
    params.value = Some(70);
    let (outs, truth) = run_in_memory(&params, 4);
    let events: Vec<_> = outs.iter().flat_map(|o| o.events.clone()).collect();
    assert!(events.iter().any(|e| e.value == 70), "{events:?}");
    let last = truth[0].last_frame().unwrap();
    assert!(events.iter().all(|e| e.frame_of_validation <= last));
    let (report, _) = evaluate(&rows_of(&outs), &truth, DEFAULT_MATCH_IOU);
    assert_eq!((report.correct, report.false_alarms), (1, 0));
}

#[test]
fn truck_speed_plates_are_never_validated() {
    let mut params = ScenarioParams::new(RegionMode::Us);
    params.sign_free = true;
    params.truck_decoy = true;
    for seed in 0..6 {
        let (outs, truth) = run_in_memory(&params, 40 + seed);
        assert!(truth.is_empty());
        let events: usize = outs.iter().map(|o| o.events.len()).sum();
        assert_eq!(events, 0, "seed {seed}");
    }
}

#[test]
fn stage_order_holds_frame_by_frame() {
    for mode in [RegionMode::Eu, RegionMode::Us] {
        let (outs, _) = run_in_memory(&ScenarioParams::new(mode), 9);
        let min_hits = pipeline(mode).config().tracker.min_hits as usize;
        let (mut hyps_seen, mut events_seen) = (0, 0);
        for o in &outs {
            for h in &o.hypotheses {
                assert!(o.candidates.iter().any(|c| c.bbox == h.bbox));
            }
            for e in &o.events {
                assert!(o.hypotheses.iter().any(|h| h.bbox == e.bbox && h.value == e.value));
            }
            hyps_seen += o.hypotheses.len();
            events_seen += o.events.len();
            // every event consumed min_hits hypotheses of its own track
            assert!(events_seen * min_hits <= hyps_seen);
            assert_eq!(o.report.candidates, o.candidates.len());
        }
    }
}

#[test]
fn stage_timings_account_for_the_frame() {
    let (outs, _) = run_in_memory(&ScenarioParams::new(RegionMode::Eu), 2);
    let stages: u64 = outs.iter().map(|o| o.report.timings.sum()).sum();
    let total: u64 = outs.iter().map(|o| o.report.total_us).sum();
    assert!(stages <= total);
    assert!(stages as f64 >= 0.9 * total as f64, "stages {stages} total {total}");
    for o in &outs {
        let (s, t) = (o.report.timings.sum(), o.report.total_us);
        if t >= 2000 {
            assert!(s as f64 >= 0.9 * t as f64, "frame {}: {s} of {t}", o.report.frame_index);
        }
    }
}

#[test]
fn directory_run_is_deterministic_and_matches_memory() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    let spec = random_scenario(&ScenarioParams::new(RegionMode::Us), 31).unwrap();
    let truth = generate_sequence(&spec, &seq).unwrap();
    let truth_back: Vec<TruthSign> = read_jsonl(fs::read(seq.join("truth.jsonl")).unwrap().as_slice()).unwrap();
    assert_eq!(truth_back, truth);

    let mut first = Vec::new();
    let annotated = dir.path().join("ann");
    let summary = run_sequence(
        &seq,
        &mut pipeline(RegionMode::Us),
        Sinks {
            detections: Some(&mut first),
            annotate_dir: Some(annotated.clone()),
        },
    )
    .unwrap();
    assert_eq!(summary.frames as u64, spec.frames);
    assert_eq!(fs::read_dir(&annotated).unwrap().count() as u64, spec.frames);
    assert!(summary.wall_clock_s >= summary.processing_s);

    let mut second = Vec::new();
    run_sequence(&seq, &mut pipeline(RegionMode::Us), Sinks { detections: Some(&mut second), annotate_dir: None }).unwrap();
    assert_eq!(first, second);

    let rows: Vec<DetectionRow> = read_jsonl(first.as_slice()).unwrap();
    let (outs, _) = run_in_memory(&ScenarioParams::new(RegionMode::Us), 31);
    assert_eq!(rows, rows_of(&outs));
    let (report, _) = evaluate(&rows, &truth, DEFAULT_MATCH_IOU);
    assert_eq!(report.correct, 1, "{report}");
    assert_eq!(rows.iter().filter(|r| r.kind == RowKind::Candidate).count(), summary.candidates);
}

#[test]
fn empty_directory_gives_an_empty_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    let s = run_sequence(dir.path(), &mut pipeline(RegionMode::Eu), Sinks { detections: Some(&mut out), annotate_dir: None }).unwrap();
    assert_eq!((s.frames, s.events), (0, 0));
    assert!(out.is_empty());
}

#[test]
fn bad_frame_error_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("frame_000001.pgm"), b"P5\n4 4\n255\n\x00").unwrap();
    let err = run_sequence(dir.path(), &mut pipeline(RegionMode::Eu), Sinks::default()).unwrap_err();
    assert!(matches!(err, Error::InFile { .. }));
    assert!(err.to_string().contains("frame_000001.pgm"), "{err}");
}

#[test]
fn eval_counts_partition_the_truth() {
    for (mode, seed) in [(RegionMode::Eu, 1), (RegionMode::Us, 2), (RegionMode::Eu, 3)] {
        let mut params = ScenarioParams::new(mode);
        params.truck_decoy = true;
        let (outs, truth) = run_in_memory(&params, seed);
        let (r, outcomes) = evaluate(&rows_of(&outs), &truth, DEFAULT_MATCH_IOU);
        assert_eq!(r.correct + r.missed + r.misclassified, r.total);
        assert_eq!(outcomes.len(), truth.len());
    }
}

/// Short dropouts must not split a sign into a second validated track.
#[test]
fn each_sign_is_validated_once() {
    let mut dupes = Vec::new();
    for seed in 0..12 {
        let mode = if seed % 2 == 0 { RegionMode::Eu } else { RegionMode::Us };
        let mut params = ScenarioParams::new(mode);
        params.noise_sigma = 8.0;
        let (outs, truth) = run_in_memory(&params, 60 + seed);
        let events = outs.iter().map(|o| o.events.len()).sum::<usize>();
        if events != truth.len() {
            dupes.push((seed, events));
        }
    }
    assert!(dupes.is_empty(), "{dupes:?}");
}
