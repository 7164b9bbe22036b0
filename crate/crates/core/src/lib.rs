//! Modulation workbench core: formula language, waveform synthesis, channel
//! models, evaluation metrics and cost models.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.

pub mod channel;
pub mod costmodel;
pub mod dsl;
pub mod io;
pub mod metrics;
pub mod rng;
mod scalar;
pub mod signal;
pub mod synth;

pub use scalar::{from_db, mean_square, to_db, Scalar};
pub use signal::{Samples, SignalError};

pub type SampledSignal = signal::SampledSignal<f64>;
pub type EvaluationContext = dsl::EvaluationContext<f64>;
pub type TimeGrid = dsl::TimeGrid<f64>;
pub type Transmission = synth::Transmission<f64>;
pub type PsdEstimate = metrics::PsdEstimate<f64>;
pub type CostInputs = costmodel::CostInputs<f64>;
