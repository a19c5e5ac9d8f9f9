//! Sequence-level scoring against ground truth.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::rows::{DetectionRow, RowKind};
pub use crate::synth::sequence::{TruthFrame, TruthSign};

/// Minimum IoU between an event box and a truth box for them to match.
pub const DEFAULT_MATCH_IOU: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Correct,
    Misclassified,
    Missed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    pub missed: usize,
    pub misclassified: usize,
    pub false_alarms: usize,
    /// `correct / total`; 1.0 by convention when there is no truth.
    pub scdr: f64,
    pub misclassification_rate: f64,
    /// Set when `total == 0` and the rates are conventions, not measurements.
    pub empty_truth: bool,
}

impl EvalReport {
    pub fn from_counts(correct: usize, missed: usize, misclassified: usize, false_alarms: usize) -> Self {
        let total = correct + missed + misclassified;
        let (scdr, misclassification_rate) = if total == 0 {
            (1.0, 0.0)
        } else {
            (correct as f64 / total as f64, misclassified as f64 / total as f64)
        };
        EvalReport {
            total,
            correct,
            missed,
            misclassified,
            false_alarms,
            scdr,
            misclassification_rate,
            empty_truth: total == 0,
        }
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total {}", self.total)?;
        writeln!(f, "correct {}", self.correct)?;
        writeln!(f, "missed {}", self.missed)?;
        writeln!(f, "misclassified {}", self.misclassified)?;
        writeln!(f, "false_alarms {}", self.false_alarms)?;
        write!(f, "SCDR {:.3}", self.scdr)?;
        if self.empty_truth {
            write!(f, " (no truth signs)")?;
        }
        writeln!(f)?;
        writeln!(f, "misclassification_rate {:.4}", self.misclassification_rate)
    }
}

/// An event lies on a truth sign when it overlaps one of the sign's boxes
/// and falls within the sign's visible frames.
fn on_sign(event: &DetectionRow, truth: &TruthSign, min_iou: f64) -> bool {
    match (truth.first_frame(), truth.last_frame()) {
        (Some(first), Some(last)) if (first..=last).contains(&event.frame) => {
            truth.frames.iter().any(|f| f.bbox.iou(&event.bbox) >= min_iou)
        }
        _ => false,
    }
}

/// Classify every truth sign and count events matching none of them.
pub fn evaluate(rows: &[DetectionRow], truth: &[TruthSign], min_iou: f64) -> (EvalReport, Vec<Outcome>) {
    let events: Vec<&DetectionRow> = rows.iter().filter(|r| r.kind == RowKind::Validated).collect();
    let outcomes: Vec<Outcome> = truth
        .iter()
        .map(|t| {
            let matching: Vec<&&DetectionRow> = events.iter().filter(|e| on_sign(e, t, min_iou)).collect();
            if matching.iter().any(|e| e.value == Some(t.value)) {
                Outcome::Correct
            } else if matching.is_empty() {
                Outcome::Missed
            } else {
                Outcome::Misclassified
            }
        })
        .collect();
    let false_alarms = events
        .iter()
        .filter(|e| !truth.iter().any(|t| on_sign(e, t, min_iou)))
        .count();
    let count = |o: Outcome| outcomes.iter().filter(|&&x| x == o).count();
    let report = EvalReport::from_counts(
        count(Outcome::Correct),
        count(Outcome::Missed),
        count(Outcome::Misclassified),
        false_alarms,
    );
    (report, outcomes)
}
