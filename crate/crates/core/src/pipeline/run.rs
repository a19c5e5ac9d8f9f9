//! Running the pipeline over a directory of frames.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::process::{FrameOutput, Pipeline, StageTimings};
use super::rows::frame_rows;
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::image::{load_frame, save_frame, GrayFrame};

/// Where per-frame results go.
#[derive(Default)]
pub struct Sinks<'a> {
    pub detections: Option<&'a mut dyn Write>,
    /// Write copies of the frames with boxes burned in.
    pub annotate_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub frames: usize,
    pub candidates: usize,
    pub hypotheses: usize,
    pub events: usize,
    pub timings: StageTimings,
    /// Time spent inside `process_frame`, in seconds.
    pub processing_s: f64,
    /// Wall-clock time including frame I/O, in seconds.
    pub wall_clock_s: f64,
    /// Frames per second of processing time.
    pub fps: f64,
}

impl RunSummary {
    pub fn record(&mut self, out: &FrameOutput) {
        self.frames += 1;
        self.candidates += out.report.candidates;
        self.hypotheses += out.report.hypotheses;
        self.events += out.report.events;
        self.timings.add(&out.report.timings);
        self.processing_s += out.report.total_us as f64 * 1e-6;
        self.fps = if self.processing_s > 0.0 {
            self.frames as f64 / self.processing_s
        } else {
            0.0
        };
    }
}

/// `.pgm` files of `dir` in name order. The frame index is the trailing
/// number of the file stem, or the position in the listing when a name has
/// none.
pub fn list_frames(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("");
            let digits = stem.len() - stem.trim_end_matches(|c: char| c.is_ascii_digit()).len();
            let index = stem[stem.len() - digits..].parse().unwrap_or(k as u64);
            (index, p)
        })
        .collect())
}

fn draw_box(frame: &mut GrayFrame, r: &Rect, value: u8, thickness: i32) {
    let (w, h) = (frame.width() as i32, frame.height() as i32);
    let mut put = |x: i32, y: i32| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            frame.set(x as usize, y as usize, value);
        }
    };
    for t in 0..thickness {
        for x in r.x - t..r.right() + t {
            put(x, r.y - t);
            put(x, r.bottom() - 1 + t);
        }
        for y in r.y - t..r.bottom() + t {
            put(r.x - t, y);
            put(r.right() - 1 + t, y);
        }
    }
}

/// Candidates as thin mid-gray boxes, hypotheses white, validated signs
/// as thick black-on-white frames.
pub fn annotate(frame: &GrayFrame, out: &FrameOutput) -> GrayFrame {
    let mut f = frame.clone();
    for c in &out.candidates {
        draw_box(&mut f, &c.bbox, 128, 1);
    }
    for h in &out.hypotheses {
        draw_box(&mut f, &h.bbox, 255, 1);
    }
    for e in &out.events {
        draw_box(&mut f, &e.bbox.translate(-1, -1), 255, 1);
        draw_box(&mut f, &Rect::new(e.bbox.x - 2, e.bbox.y - 2, e.bbox.w + 4, e.bbox.h + 4), 0, 2);
    }
    f
}

/// Process every frame of `dir` in order. Detection rows are written as
/// each frame completes; an unreadable frame stops the run with an error
/// naming the file.
pub fn run_sequence(dir: &Path, pipeline: &mut Pipeline, sinks: Sinks<'_>) -> Result<RunSummary> {
    let start = Instant::now();
    let Sinks {
        mut detections,
        annotate_dir,
    } = sinks;
    if let Some(a) = &annotate_dir {
        fs::create_dir_all(a).map_err(|e| Error::io(a, e))?;
    }
    let mut summary = RunSummary::default();
    for (index, path) in list_frames(dir)? {
        let frame = load_frame(&path)
            .map_err(|e| e.in_file(&path))?
            .with_index(index);
        let out = pipeline.process_frame(&frame).map_err(|e| e.in_file(&path))?;
        if let Some(w) = detections.as_deref_mut() {
            let mut text = String::new();
            for row in frame_rows(&out) {
                text.push_str(&row.to_line());
                text.push('\n');
            }
            w.write_all(text.as_bytes()).map_err(|e| Error::io("<detections>", e))?;
        }
        if let Some(a) = &annotate_dir {
            let name = path.file_name().map(PathBuf::from).unwrap_or_else(|| format!("frame_{index:06}.pgm").into());
            save_frame(&annotate(&frame, &out), a.join(name))?;
        }
        summary.record(&out);
    }
    if let Some(w) = detections {
        w.flush().map_err(|e| Error::io("<detections>", e))?;
    }
    summary.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(summary)
}
