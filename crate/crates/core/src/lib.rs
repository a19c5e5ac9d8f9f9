//! Speed-limit sign recognition for grayscale video.
//!
//! Frames pass through shape detection, digit segmentation, a small neural
//! recognizer and a tracker that only reports a sign once enough frames
//! agree on its value.

// Config checks use `!(x >= lo)` on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod image;
pub mod odr;
pub mod pipeline;
pub mod segment;
pub mod shape;
pub mod synth;
pub mod tracking;

pub use error::{Error, Result};
pub use geometry::Rect;
pub use image::{BinaryImage, GradientField, GrayFrame, IntegralImage};
