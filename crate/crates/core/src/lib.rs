//! Three-way tweet polarity classification with a soft-voting ensemble of
//! linear models over tf-idf and word-embedding views.
//!
//! Numeric components are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below name the common instantiations.

pub mod bow;
pub mod bundle;
pub mod corpus;
pub mod embedding;
pub mod ensemble;
pub mod evaluation;
pub mod linear;
pub mod preprocess;
pub mod scalar;
pub mod vector;

pub use scalar::{sigmoid, softplus, Precision, Scalar};

pub use bundle::{BundleError, EmbeddingRef, ModelBundle};
pub use corpus::{Document, LabeledDocument, SentimentLabel};
pub use ensemble::{fit_ensemble, EnsembleConfig, EnsembleModel, ViewSpec};
pub use evaluation::{evaluate, EvalReport};

pub type TfIdfModel32 = bow::TfIdfModel<f32>;
pub type TfIdfModel64 = bow::TfIdfModel<f64>;
pub type EmbeddingTable32 = embedding::EmbeddingTable<f32>;
pub type EmbeddingTable64 = embedding::EmbeddingTable<f64>;
pub type MulticlassModel32 = linear::MulticlassModel<f32>;
pub type MulticlassModel64 = linear::MulticlassModel<f64>;
pub type EnsembleModel32 = EnsembleModel<f32>;
pub type EnsembleModel64 = EnsembleModel<f64>;
pub type EnsembleConfig32 = EnsembleConfig<f32>;
pub type EnsembleConfig64 = EnsembleConfig<f64>;
pub type ModelBundle32 = ModelBundle<f32>;
pub type ModelBundle64 = ModelBundle<f64>;
