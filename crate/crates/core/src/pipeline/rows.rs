//! Detection stream rows, one JSON object per line.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::process::FrameOutput;
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::shape::ShapeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Candidate,
    Hypothesis,
    Validated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub frame: u64,
    pub kind: RowKind,
    pub shape: ShapeKind,
    pub bbox: Rect,
    pub value: Option<u32>,
    pub confidence: f64,
}

impl DetectionRow {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("detection rows serialize")
    }
}

/// Rows for one processed frame: candidates, then hypotheses, then events.
pub fn frame_rows(out: &FrameOutput) -> Vec<DetectionRow> {
    let frame = out.report.frame_index;
    let mut rows = Vec::with_capacity(out.candidates.len() + out.hypotheses.len() + out.events.len());
    rows.extend(out.candidates.iter().map(|c| DetectionRow {
        frame,
        kind: RowKind::Candidate,
        shape: c.kind,
        bbox: c.bbox,
        value: None,
        confidence: c.score,
    }));
    rows.extend(out.hypotheses.iter().map(|h| DetectionRow {
        frame,
        kind: RowKind::Hypothesis,
        shape: h.kind,
        bbox: h.bbox,
        value: Some(h.value),
        confidence: h.confidence,
    }));
    rows.extend(out.events.iter().map(|e| DetectionRow {
        frame,
        kind: RowKind::Validated,
        shape: e.kind,
        bbox: e.bbox,
        value: Some(e.value),
        confidence: e.confidence,
    }));
    rows
}

/// Parse JSONL rows of any `Deserialize` type, skipping blank lines.
/// Errors carry the 1-based line number.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(input: impl BufRead) -> Result<Vec<T>> {
    let mut rows = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}
