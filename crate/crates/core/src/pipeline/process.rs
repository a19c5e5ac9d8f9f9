//! Per-frame processing: detect, segment, recognize, track.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::image::{sobel, GrayFrame};
use crate::odr::recognize::{HEADER_LEN, HEADER_OUTPUTS};
use crate::odr::{assemble_value, classify_glyph, load_model, us_header_check, MlpParams, RegionMode, SignHypothesis};
use crate::segment::{segment_roi, GLYPH_LEN};
use crate::shape::{detect_shapes, ShapeCandidate};
use crate::tracking::{Tracker, ValidatedSign};

/// Elapsed microseconds per stage of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub gradient_us: u64,
    pub detect_us: u64,
    pub segment_us: u64,
    pub recognize_us: u64,
    pub track_us: u64,
}

impl StageTimings {
    pub fn sum(&self) -> u64 {
        self.gradient_us + self.detect_us + self.segment_us + self.recognize_us + self.track_us
    }

    pub fn add(&mut self, other: &StageTimings) {
        self.gradient_us += other.gradient_us;
        self.detect_us += other.detect_us;
        self.segment_us += other.segment_us;
        self.recognize_us += other.recognize_us;
        self.track_us += other.track_us;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame_index: u64,
    pub candidates: usize,
    pub hypotheses: usize,
    pub events: usize,
    pub timings: StageTimings,
    /// Wall-clock time of the whole frame.
    pub total_us: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub report: FrameReport,
    pub candidates: Vec<ShapeCandidate>,
    pub hypotheses: Vec<SignHypothesis>,
    pub events: Vec<ValidatedSign>,
}

/// Pipeline state carried across frames.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    values: Vec<u32>,
    digit: MlpParams,
    header: Option<MlpParams>,
    tracker: Tracker,
}

fn micros(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

fn check_model(params: &MlpParams, inputs: usize, outputs: usize, what: &str) -> Result<()> {
    if params.input_size() != inputs || params.output_size() != outputs {
        return Err(Error::Config(format!(
            "{what} model maps {} inputs to {} outputs, expected {inputs} to {outputs}",
            params.input_size(),
            params.output_size()
        )));
    }
    Ok(())
}

impl Pipeline {
    /// A header model is required in US mode and ignored in EU mode.
    pub fn new(cfg: PipelineConfig, digit: MlpParams, header: Option<MlpParams>) -> Result<Self> {
        cfg.validate()?;
        check_model(&digit, GLYPH_LEN, 10, "digit")?;
        let header = match cfg.mode {
            RegionMode::Eu => None,
            RegionMode::Us => {
                let h = header.ok_or_else(|| Error::Config("US mode requires a header model".into()))?;
                check_model(&h, HEADER_LEN, HEADER_OUTPUTS, "header")?;
                Some(h)
            }
        };
        Ok(Pipeline {
            values: cfg.values(),
            tracker: Tracker::new(cfg.tracker.clone()),
            cfg,
            digit,
            header,
        })
    }

    /// Load the models named in the configuration.
    pub fn from_config(cfg: PipelineConfig) -> Result<Self> {
        let read = |p: &std::path::Path| -> Result<MlpParams> {
            let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            load_model(&bytes).map_err(|e| e.in_file(p))
        };
        let digit_path = cfg
            .digit_model
            .clone()
            .ok_or_else(|| Error::Config("no digit model configured".into()))?;
        let digit = read(&digit_path)?;
        let header = match (cfg.mode, &cfg.header_model) {
            (RegionMode::Us, Some(p)) => Some(read(p)?),
            (RegionMode::Us, None) => return Err(Error::Config("US mode requires a header model".into())),
            (RegionMode::Eu, _) => None,
        };
        Pipeline::new(cfg, digit, header)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    /// Read one candidate, or `None` if it holds no acceptable sign.
    fn hypothesis(
        &self,
        frame: &GrayFrame,
        cand: &ShapeCandidate,
        timings: &mut StageTimings,
    ) -> Result<Option<SignHypothesis>> {
        let t = Instant::now();
        let glyphs = segment_roi(frame, cand, &self.cfg.segment)?;
        timings.segment_us += micros(t);
        if glyphs.is_empty() {
            return Ok(None);
        }
        let t = Instant::now();
        let result = (|| {
            if let Some(header) = &self.header {
                let Some(region) = cand.header.map(|h| h.intersection(&frame.bounds())) else {
                    return Ok(None);
                };
                if region.is_empty() || !us_header_check(header, frame, &region)?.accept {
                    return Ok(None);
                }
            }
            let readings = glyphs
                .iter()
                .map(|g| classify_glyph(&self.digit, g, self.cfg.reject_threshold, self.cfg.margin))
                .collect::<Result<Vec<_>>>()?;
            Ok(assemble_value(&readings, self.cfg.mode, &self.values).map(|(value, confidence)| SignHypothesis {
                frame_index: frame.frame_index,
                bbox: cand.bbox,
                value,
                confidence,
                kind: cand.kind,
            }))
        })();
        timings.recognize_us += micros(t);
        result
    }

    /// Process the next frame. Frames must arrive in strictly increasing
    /// `frame_index` order.
    pub fn process_frame(&mut self, frame: &GrayFrame) -> Result<FrameOutput> {
        let start = Instant::now();
        if let Some(previous) = self.tracker.last_frame() {
            if frame.frame_index <= previous {
                return Err(Error::Sequencing {
                    previous,
                    got: frame.frame_index,
                });
            }
        }
        let mut timings = StageTimings::default();

        let t = Instant::now();
        let grad = sobel(frame)?;
        timings.gradient_us = micros(t);

        let t = Instant::now();
        let candidates = detect_shapes(&grad, self.cfg.mode.shape(), &self.cfg.detector);
        timings.detect_us = micros(t);

        let mut hypotheses = Vec::new();
        for cand in &candidates {
            if let Some(h) = self.hypothesis(frame, cand, &mut timings)? {
                hypotheses.push(h);
            }
        }

        let t = Instant::now();
        let events = self.tracker.step(&hypotheses, frame.frame_index)?;
        timings.track_us = micros(t);

        Ok(FrameOutput {
            report: FrameReport {
                frame_index: frame.frame_index,
                candidates: candidates.len(),
                hypotheses: hypotheses.len(),
                events: events.len(),
                timings,
                total_us: micros(start),
            },
            candidates,
            hypotheses,
            events,
        })
    }
}
