//! Semantic drift of emoji and words across time- and platform-sliced
//! corpora: ingestion, tokenization, per-slice skip-gram embeddings, analogy
//! sanity checks, a pairwise-distance drift statistic and similarity time
//! series, plus a synthetic benchmark with planted drift.

pub mod analogy;
pub mod corpus;
pub mod drift;
pub mod emoji;
pub mod error;
pub mod model;
pub mod scalar;
pub mod shapiro;
pub mod synth;
pub mod timeseries;
pub mod train;
pub mod vocab;

pub use error::{Error, Result};
pub use scalar::Real;

/// Single-precision embedding table, the on-disk training output.
pub type Model32 = model::EmbeddingModel<f32>;
/// Double-precision embedding table.
pub type Model64 = model::EmbeddingModel<f64>;
pub type DistanceMatrix32 = drift::DistanceMatrix<f32>;
pub type DistanceMatrix64 = drift::DistanceMatrix<f64>;
pub type ShiftMatrix64 = drift::ShiftMatrix<f64>;
pub type Trained32 = train::TrainedModel<f32>;
pub type Trained64 = train::TrainedModel<f64>;
