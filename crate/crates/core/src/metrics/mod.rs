//! Spectral estimates, demodulation, error rates and comparison reports.

mod demod;
mod efficiency;
mod psd;
mod report;

use thiserror::Error;

pub use demod::{ber, bit_errors, correlation_receiver, demodulate, extract_constellation, BitErrors};
pub use efficiency::{spectral_efficiency_measured, spectral_efficiency_theoretical};
pub use psd::{occupied_bandwidth, spectrogram, welch_psd, PsdEstimate, Spectrogram, Window};
pub use report::{
    compare, evaluate_scheme, recover_bits, ComparisonTable, MetricsParams, MetricsReport, SchemeEvaluation,
    COMPARISON_COLUMNS,
};

use crate::channel::ChannelError;
use crate::dsl::EvalError;
use crate::signal::SignalError;
use crate::synth::SynthError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("synth: {0}")]
    Synth(#[from] SynthError),
    #[error("channel: {0}")]
    Channel(#[from] ChannelError),
    #[error("receiver: {0}")]
    Eval(#[from] EvalError),
    #[error("signal: {0}")]
    Signal(#[from] SignalError),
    #[error("segment length {segment} exceeds signal length {len}")]
    SegmentTooLong { segment: usize, len: usize },
    #[error("{0}")]
    InvalidParameter(String),
    #[error("power spectrum is all zero")]
    DegeneratePsd,
    #[error("signal carries no bit ground truth")]
    MissingGroundTruth,
    #[error("formula schemes need the correlation receiver")]
    NeedsCorrelationReceiver,
    #[error("signal has {len} samples, {needed} needed")]
    TooShort { needed: usize, len: usize },
    #[error("bit streams differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("no bits to compare")]
    NoBits,
    #[error("constellation size {0} is not a power of two >= 2")]
    NotPowerOfTwo(u64),
    #[error("bandwidth must be positive")]
    ZeroBandwidth,
}
