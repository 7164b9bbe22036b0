use std::sync::Arc;

use num_complex::Complex;

use super::bits::{gen_bits, gray_decode, labels};
use super::constellation::Constellation;
use super::scheme::{Scheme, SchemeConfig};
use super::SynthError;
use crate::dsl::{evaluate, Binding, EvalOptions, EvaluationContext, Expr, TimeGrid};
use crate::signal::SampledSignal;
use crate::Scalar;

/// Values the per-symbol formula signals take for one symbol label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolValues<T> {
    pub i: T,
    pub q: T,
    pub d: T,
    pub m: T,
    pub f: T,
}

/// Formula bindings drawn from a base scheme's symbol stream, plus the
/// ground truth that produced them.
#[derive(Debug, Clone)]
pub struct FormulaContext<T> {
    pub eval: EvaluationContext<T>,
    pub base: Scheme,
    pub bits: Vec<bool>,
    pub labels: Vec<usize>,
    pub symbols: Vec<Complex<T>>,
    pub bits_per_symbol: usize,
    pub samples_per_symbol: usize,
    pub sample_rate: T,
    scalars: EvaluationContext<T>,
    alphabet: Vec<SymbolValues<T>>,
    signal_overrides: Vec<(String, T)>,
}

const SIGNALS: [&str; 5] = ["I(t)", "Q(t)", "d(t)", "m(t)", "f(t)"];

/// I/Q alphabet used by the base schemes of formula synthesis.
pub fn base_alphabet(base: &Scheme) -> Result<Constellation<f64>, SynthError> {
    match base {
        Scheme::Bpsk => Ok(Constellation::bpsk()),
        Scheme::Qpsk => Ok(Constellation::qpsk()),
        Scheme::Qam(m) => Constellation::qam(*m),
        Scheme::Ook => Ok(Constellation {
            points: vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)],
            bits_per_symbol: 1,
        }),
        other => Err(SynthError::BadBase(other.clone())),
    }
}

impl<T: Scalar> FormulaContext<T> {
    /// Number of candidate symbols.
    pub fn order(&self) -> usize {
        self.alphabet.len()
    }

    pub fn symbol_values(&self, label: usize) -> SymbolValues<T> {
        self.alphabet[label]
    }

    /// Bindings with every signal held at the values of `label`.
    pub fn candidate_context(&self, label: usize) -> EvaluationContext<T> {
        let v = self.alphabet[label];
        let mut ctx = self.scalars.clone();
        for (name, value) in SIGNALS.iter().zip([v.i, v.q, v.d, v.m, v.f]) {
            ctx.constant(*name, value);
        }
        for (name, value) in &self.signal_overrides {
            ctx.constant(name.clone(), *value);
        }
        ctx
    }
}

/// Builds the formula bindings for `config`, drawing bits from `config.seed`.
pub fn formula_context<T: Scalar>(config: &SchemeConfig) -> Result<FormulaContext<T>, SynthError> {
    let bits = gen_bits(config.symbols * config.bits_per_symbol(), config.seed);
    formula_context_with_bits(config, &bits)
}

pub fn formula_context_with_bits<T: Scalar>(
    config: &SchemeConfig,
    bits: &[bool],
) -> Result<FormulaContext<T>, SynthError> {
    config.validate()?;
    let alphabet = base_alphabet(&config.base)?;
    let k = alphabet.bits_per_symbol;
    if bits.len() != config.symbols * k {
        return Err(SynthError::BitCountMismatch {
            expected: config.symbols * k,
            got: bits.len(),
        });
    }
    let order = alphabet.order();
    let values: Vec<SymbolValues<T>> = alphabet
        .points
        .iter()
        .enumerate()
        .map(|(label, p)| {
            let d = gray_decode(label);
            SymbolValues {
                i: T::lit(p.re),
                q: T::lit(p.im),
                d: T::from_usize_lossy(d),
                m: T::lit(p.re),
                f: T::lit(config.fsk_tone(d, order)),
            }
        })
        .collect();

    let a = T::lit(config.amplitude);
    let mut scalars = EvaluationContext::new();
    scalars
        .constant("A", a)
        .constant("A_c", a)
        .constant("f_c", T::lit(config.carrier_hz))
        .constant("f_m", T::lit(config.tone_hz))
        .constant("m", T::lit(config.am_index))
        .constant("k_f", T::lit(config.k_f()))
        .constant("k_p", T::lit(config.pm_deviation))
        .constant("phi", T::zero())
        .constant("phi_c", T::zero())
        .constant("phi_m", T::zero())
        .constant("n", T::lit(4.0));
    let mut signal_overrides = Vec::new();
    for (name, value) in &config.constants {
        if name.ends_with("(t)") {
            signal_overrides.push((name.clone(), T::lit(*value)));
        } else {
            scalars.constant(name.clone(), T::lit(*value));
        }
    }

    let labels = labels(bits, k);
    let sps = config.samples_per_symbol;
    let mut eval = scalars.clone();
    let per_symbol = |get: fn(&SymbolValues<T>) -> T| Binding::PerSymbol {
        values: labels.iter().map(|&l| get(&values[l])).collect::<Arc<[T]>>(),
        samples_per_symbol: sps,
    };
    eval.bind("I(t)", per_symbol(|v| v.i))
        .bind("Q(t)", per_symbol(|v| v.q))
        .bind("d(t)", per_symbol(|v| v.d))
        .bind("m(t)", per_symbol(|v| v.m))
        .bind("f(t)", per_symbol(|v| v.f));
    for (name, value) in &signal_overrides {
        eval.constant(name.clone(), *value);
    }

    let symbols = labels
        .iter()
        .map(|&l| Complex::new(T::lit(alphabet.points[l].re), T::lit(alphabet.points[l].im)))
        .collect();
    Ok(FormulaContext {
        eval,
        base: config.base.clone(),
        bits: bits.to_vec(),
        labels,
        symbols,
        bits_per_symbol: k,
        samples_per_symbol: sps,
        sample_rate: T::lit(config.sample_rate()),
        scalars,
        alphabet: values,
        signal_overrides,
    })
}

/// Evaluates `expr` over the configured grid and attaches the context's
/// ground truth.
pub fn modulate_formula<T: Scalar>(
    expr: &Expr,
    ctx: &FormulaContext<T>,
    config: &SchemeConfig,
) -> Result<SampledSignal<T>, SynthError> {
    if expr.mentions("f(t)") {
        let spread = (ctx.order() as f64 - 1.0) / 2.0 * config.fsk_spacing();
        config.check_band(spread + config.symbol_rate)?;
    }
    let grid = TimeGrid::new(T::lit(config.sample_rate()), config.sample_count());
    let ev = evaluate(expr, &ctx.eval, &grid, &EvalOptions::default())?;
    let mut sig = SampledSignal::real(ev.samples, grid.sample_rate);
    sig.symbol_rate = Some(T::lit(config.symbol_rate));
    sig.bits_per_symbol = Some(ctx.bits_per_symbol);
    sig.origin_bits = Some(ctx.bits.clone());
    sig.origin_symbols = Some(ctx.symbols.clone());
    sig.guard_count = ev.guard_count;
    Ok(sig)
}
