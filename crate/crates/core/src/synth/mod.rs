//! Synthetic test data: rendered signs, labeled training corpora and
//! annotated driving sequences.

pub mod canvas;
pub mod corpus;
pub mod font;
pub mod sequence;
pub mod sign;

pub use canvas::Canvas;
pub use corpus::{generate_digit_corpus, generate_header_corpus, CorpusConfig};
pub use sign::{draw_sign, render_sign, Legend, RenderedSign, SignLayout, SignSpec};
pub use sequence::{
    generate_sequence, random_scenario, write_truth, Approach, ScenarioParams, ScenarioSign, ScenarioSpec,
    SequenceRenderer, TruthFrame, TruthSign,
};
