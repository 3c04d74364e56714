//! Partially linear functional additive models with cross-validation model
//! averaging.
// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod error;
pub mod fpca;
pub mod linalg;
pub mod pipeline;
pub mod plfam;
pub mod scalar;
pub mod spline;

pub use averaging::{AveragingConfig, CandidateMode, Method, ModelAverage};
pub use error::{Error, Result};
pub use fpca::{ComponentCount, FpcaFit, FunctionalDataset};
pub use pipeline::TrainedModel;
pub use plfam::{CandidateSpec, FittedCandidate, Smoothing};
pub use scalar::Real;
pub use spline::{BasisConfig, SplineBasis};

pub type FunctionalDataset64 = FunctionalDataset<f64>;
pub type FpcaFit64 = FpcaFit<f64>;
pub type SplineBasis64 = SplineBasis<f64>;
pub type FittedCandidate64 = FittedCandidate<f64>;
pub type ModelAverage64 = ModelAverage<f64>;
pub type TrainedModel64 = TrainedModel<f64>;
pub type WeightVector64 = averaging::WeightVector<f64>;

pub type FunctionalDataset32 = FunctionalDataset<f32>;
pub type FpcaFit32 = FpcaFit<f32>;
pub type FittedCandidate32 = FittedCandidate<f32>;
pub type ModelAverage32 = ModelAverage<f32>;
pub type TrainedModel32 = TrainedModel<f32>;
