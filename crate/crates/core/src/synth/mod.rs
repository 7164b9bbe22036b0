//! Bit sources, constellations, reference modulators and formula-driven
//! waveform synthesis.

mod bits;
mod constellation;
mod formula;
mod pulse;
mod reference;
mod scheme;

use thiserror::Error;

pub use bits::{bits_to_uint, gen_bits, gray_decode, gray_encode, labels, uint_to_bits};
pub use constellation::Constellation;
pub use formula::{
    base_alphabet, formula_context, formula_context_with_bits, modulate_formula, FormulaContext,
    SymbolValues,
};
pub use pulse::{gaussian_taps, rrc_taps, smooth_hold};
pub use reference::{
    chirp_phase, modulate_reference, modulate_reference_with_bits, reference_alphabet,
    shaped_baseband,
};
pub use scheme::{MessageSource, PulseShape, Scheme, SchemeConfig, QAM_ORDERS};

pub use crate::signal::{normalize_power, Normalized};

use crate::dsl::{self, CorpusEntry, EvalError, Expr, ParseOptions, SymbolTable, ValidationPolicy, ValidationReport};
use crate::signal::{SampledSignal, SignalError};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("unknown scheme '{0}'")]
    UnknownScheme(String),
    #[error("unsupported constellation order {0}")]
    UnsupportedOrder(usize),
    #[error("{count} bits do not divide into {bits_per_symbol}-bit symbols")]
    BitCountNotDivisible { count: usize, bits_per_symbol: usize },
    #[error("expected {expected} bits, got {got}")]
    BitCountMismatch { expected: usize, got: usize },
    #[error("invalid scheme config: {0}")]
    InvalidConfig(String),
    #[error(
        "carrier {carrier_hz} Hz with half-band {half_band_hz} Hz does not fit below Nyquist {nyquist_hz} Hz"
    )]
    Nyquist {
        carrier_hz: f64,
        half_band_hz: f64,
        nyquist_hz: f64,
    },
    #[error("{0} is not a reference scheme")]
    NotReference(Scheme),
    #[error("{0} cannot supply formula symbol streams")]
    BadBase(Scheme),
    #[error("no formula with id '{0}'")]
    UnknownFormula(String),
    #[error("formula {id} failed validation: {message}")]
    FormulaRejected { id: String, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// A parsed and validated corpus formula.
#[derive(Debug, Clone)]
pub struct ResolvedFormula {
    pub entry: CorpusEntry,
    pub expr: Expr,
    pub report: ValidationReport,
}

/// Looks `id` up in `corpus`, then in the bundled corpora, and validates it.
pub fn resolve_formula(id: &str, corpus: &[CorpusEntry]) -> Result<ResolvedFormula, SynthError> {
    let entry = corpus
        .iter()
        .find(|e| e.id.eq_ignore_ascii_case(id))
        .cloned()
        .or_else(|| dsl::bundled_entry(id))
        .ok_or_else(|| SynthError::UnknownFormula(id.to_string()))?;
    let (expr, report) = dsl::validate_text(
        &entry.formula,
        &SymbolTable::standard(),
        &ValidationPolicy::default(),
        &ParseOptions::default(),
    );
    match expr {
        Some(expr) if report.is_evaluable() => Ok(ResolvedFormula { entry, expr, report }),
        _ => Err(SynthError::FormulaRejected {
            id: entry.id.clone(),
            message: report.error_messages.join("; "),
        }),
    }
}

/// Noiseless transmission: the waveform plus what a receiver needs to know
/// about how it was built.
#[derive(Debug, Clone)]
pub struct Transmission<T> {
    pub config: SchemeConfig,
    pub signal: SampledSignal<T>,
    pub formula: Option<FormulaTransmission<T>>,
}

#[derive(Debug, Clone)]
pub struct FormulaTransmission<T> {
    pub resolved: ResolvedFormula,
    pub context: FormulaContext<T>,
}

/// Synthesizes any scheme, resolving formula ids against `corpus`.
pub fn transmit<T: Scalar>(config: &SchemeConfig, corpus: &[CorpusEntry]) -> Result<Transmission<T>, SynthError> {
    match &config.scheme {
        Scheme::Formula(id) => {
            let resolved = resolve_formula(id, corpus)?;
            let context = formula_context(config)?;
            let signal = modulate_formula(&resolved.expr, &context, config)?;
            Ok(Transmission {
                config: config.clone(),
                signal,
                formula: Some(FormulaTransmission { resolved, context }),
            })
        }
        _ => Ok(Transmission {
            config: config.clone(),
            signal: modulate_reference(config)?,
            formula: None,
        }),
    }
}

impl<T: Scalar> Transmission<T> {
    /// Scales the waveform to `target_power`, recording the gain.
    pub fn normalized(mut self, target_power: T) -> Result<Self, SynthError> {
        self.signal = normalize_power(&self.signal, target_power)?.signal;
        Ok(self)
    }
}
