//! Desk-scale BERT pretraining toolkit for Uzbek Cyrillic text.
//!
//! ```text
//! raw text ─► corpus ─► tokenizer ─► training ─► checkpoint ─► evaluation
//!             normalize  WordPiece    MLM + NSP    manifest      top-k masked
//!             sentences  encode/pack  two phases   + params.bin  word match
//! ```
//!
//! The encoder is generic over [`Scalar`] (`f32` for training, `f64` for
//! gradient checks); the aliases below pick the common instantiations.

pub mod corpus;
pub mod evaluation;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod tokenizer;
pub mod training;

pub use scalar::Scalar;

pub type EncoderState32 = model::EncoderState<f32>;
pub type EncoderState64 = model::EncoderState<f64>;
pub type OptimizerState32 = training::OptimizerState<f32>;
pub type Trainer32 = training::Trainer<f32>;
pub type CheckpointPredictor32 = evaluation::CheckpointPredictor<f32>;
