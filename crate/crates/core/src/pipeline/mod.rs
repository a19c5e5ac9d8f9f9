//! The full per-frame pipeline, its configuration, detection streams and
//! scoring.

pub mod config;
pub mod eval;
pub mod process;
pub mod rows;
pub mod run;

pub use config::PipelineConfig;
pub use eval::{evaluate, EvalReport, Outcome, DEFAULT_MATCH_IOU};
pub use process::{FrameOutput, FrameReport, Pipeline, StageTimings};
pub use rows::{frame_rows, read_jsonl, DetectionRow, RowKind};
pub use run::{annotate, list_frames, run_sequence, RunSummary, Sinks};
