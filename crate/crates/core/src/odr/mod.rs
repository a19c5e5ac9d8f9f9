//! Optical digit recognition: a small logistic MLP, its training loop and
//! file formats, and the rules turning its outputs into sign readings.

pub mod dataset;
pub mod mlp;
pub mod model_io;
pub mod recognize;

pub use dataset::{Dataset, DigitDataset, Example, Label};
pub use mlp::{train, Gradients, MlpParams, TrainConfig, TrainReport};
pub use model_io::{load_model, save_model};
pub use recognize::{
    assemble_value, classify_glyph, classify_outputs, header_features, us_header_check, DigitReading,
    HeaderCheck, RegionMode, SignHypothesis,
};
