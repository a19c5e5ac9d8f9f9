//! Pipeline configuration and its flat `key=value` file format.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odr::recognize::{DEFAULT_MARGIN, DEFAULT_REJECT_THRESHOLD};
use crate::odr::RegionMode;
use crate::segment::SegmentConfig;
use crate::shape::DetectorConfig;
use crate::tracking::TrackerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: RegionMode,
    pub detector: DetectorConfig,
    pub segment: SegmentConfig,
    pub reject_threshold: f64,
    pub margin: f64,
    pub tracker: TrackerConfig,
    pub digit_model: Option<PathBuf>,
    pub header_model: Option<PathBuf>,
    /// Accepted speed values; empty means the mode's default set.
    pub valid_values: Vec<u32>,
}

impl PipelineConfig {
    pub fn new(mode: RegionMode) -> Self {
        PipelineConfig {
            mode,
            detector: DetectorConfig::default(),
            segment: SegmentConfig::default(),
            reject_threshold: DEFAULT_REJECT_THRESHOLD,
            margin: DEFAULT_MARGIN,
            tracker: TrackerConfig::default(),
            digit_model: None,
            header_model: None,
            valid_values: Vec::new(),
        }
    }

    pub fn values(&self) -> Vec<u32> {
        if self.valid_values.is_empty() {
            self.mode.default_values()
        } else {
            self.valid_values.clone()
        }
    }

    /// Parameter checks that do not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.tracker.validate()?;
        if !(0.0..=1.0).contains(&self.reject_threshold) || !(0.0..=1.0).contains(&self.margin) {
            return Err(Error::Config("odr.reject_threshold and odr.margin must lie in [0, 1]".into()));
        }
        if let Some(w) = self.segment.window {
            if w < 3 || w % 2 == 0 {
                return Err(Error::Config(format!("segment.window must be odd and >= 3, got {w}")));
            }
        }
        if !(self.segment.min_contrast >= 0.0) {
            return Err(Error::Config("segment.min_contrast must be non-negative".into()));
        }
        if self.valid_values.iter().any(|&v| v == 0 || v > 999) {
            return Err(Error::Config("odr.valid_values must lie in 1..=999".into()));
        }
        Ok(())
    }

    /// Parse the text form; starts from the defaults of `mode` unless the
    /// file sets `mode` itself.
    pub fn parse(text: &str, mode: RegionMode) -> Result<Self> {
        let mut cfg = PipelineConfig::new(mode);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Parse { line: n + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| bad(e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, mode: RegionMode) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, mode)?;
        // relative model paths are relative to the config file
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.digit_model, &mut cfg.header_model].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Set one namespaced key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
        }
        let d = &mut self.detector;
        let t = &mut self.tracker;
        match key {
            "mode" => self.mode = value.parse()?,
            "detector.r_min" => d.r_min = num(key, value)?,
            "detector.r_max" => d.r_max = num(key, value)?,
            "detector.magnitude_threshold" => d.magnitude_threshold = num(key, value)?,
            "detector.vote_threshold" => d.vote_threshold = num(key, value)?,
            "detector.rect_aspect_min" => d.rect_aspect_min = num(key, value)?,
            "detector.rect_aspect_max" => d.rect_aspect_max = num(key, value)?,
            "detector.rect_min_side" => d.rect_min_side = num(key, value)?,
            "detector.rect_max_side" => d.rect_max_side = num(key, value)?,
            "detector.rect_max_tilt_deg" => d.rect_max_tilt_deg = num(key, value)?,
            "detector.nms_iou" => d.nms_iou = num(key, value)?,
            "segment.offset" => self.segment.offset = num(key, value)?,
            "segment.window" => {
                self.segment.window = match value {
                    "auto" => None,
                    v => Some(num(key, v)?),
                }
            }
            "segment.min_contrast" => self.segment.min_contrast = num(key, value)?,
            "odr.reject_threshold" => self.reject_threshold = num(key, value)?,
            "odr.margin" => self.margin = num(key, value)?,
            "odr.valid_values" => {
                self.valid_values = value
                    .split(',')
                    .map(|v| num(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "tracker.min_hits" => t.min_hits = num(key, value)?,
            "tracker.confidence_threshold" => t.confidence_threshold = num(key, value)?,
            "tracker.max_gap" => t.max_gap = num(key, value)?,
            "tracker.gate_factor" => t.gate_factor = num(key, value)?,
            "tracker.max_scale_growth" => t.max_scale_growth = num(key, value)?,
            "model.digit" => self.digit_model = Some(PathBuf::from(value)),
            "model.header" => self.header_model = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Text form accepted by [`PipelineConfig::parse`].
    pub fn to_text(&self) -> String {
        let d = &self.detector;
        let t = &self.tracker;
        let mut lines = vec![
            format!("mode={}", self.mode),
            format!("detector.r_min={}", d.r_min),
            format!("detector.r_max={}", d.r_max),
            format!("detector.magnitude_threshold={}", d.magnitude_threshold),
            format!("detector.vote_threshold={}", d.vote_threshold),
            format!("detector.rect_aspect_min={}", d.rect_aspect_min),
            format!("detector.rect_aspect_max={}", d.rect_aspect_max),
            format!("detector.rect_min_side={}", d.rect_min_side),
            format!("detector.rect_max_side={}", d.rect_max_side),
            format!("detector.rect_max_tilt_deg={}", d.rect_max_tilt_deg),
            format!("detector.nms_iou={}", d.nms_iou),
            format!("segment.offset={}", self.segment.offset),
            format!(
                "segment.window={}",
                self.segment.window.map_or("auto".to_string(), |w| w.to_string())
            ),
            format!("segment.min_contrast={}", self.segment.min_contrast),
            format!("odr.reject_threshold={}", self.reject_threshold),
            format!("odr.margin={}", self.margin),
            format!("tracker.min_hits={}", t.min_hits),
            format!("tracker.confidence_threshold={}", t.confidence_threshold),
            format!("tracker.max_gap={}", t.max_gap),
            format!("tracker.gate_factor={}", t.gate_factor),
            format!("tracker.max_scale_growth={}", t.max_scale_growth),
        ];
        if !self.valid_values.is_empty() {
            let v: Vec<String> = self.valid_values.iter().map(u32::to_string).collect();
            lines.push(format!("odr.valid_values={}", v.join(",")));
        }
        if let Some(p) = &self.digit_model {
            lines.push(format!("model.digit={}", p.display()));
        }
        if let Some(p) = &self.header_model {
            lines.push(format!("model.header={}", p.display()));
        }
        lines.join("\n") + "\n"
    }
}
