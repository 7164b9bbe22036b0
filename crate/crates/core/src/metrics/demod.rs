use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;

use super::MetricsError;
use crate::dsl::{evaluate_segment, EvalOptions, Expr, IntegralState, TimeGrid};
use crate::signal::{SampledSignal, Samples};
use crate::synth::{
    chirp_phase, gray_encode, reference_alphabet, rrc_taps, uint_to_bits, FormulaContext, PulseShape, Scheme, SchemeConfig,
};
use crate::Scalar;

fn real_samples<T: Scalar>(signal: &SampledSignal<T>, needed: usize) -> Result<Vec<f64>, MetricsError> {
    let v: Vec<f64> = match &signal.samples {
        Samples::Real(v) => v.iter().map(|x| x.as_f64()).collect(),
        Samples::Complex(v) => v.iter().map(|z| z.re.as_f64()).collect(),
    };
    if v.len() < needed {
        return Err(MetricsError::TooShort {
            needed,
            len: v.len(),
        });
    }
    Ok(v)
}

fn check_band(config: &SchemeConfig) -> Result<(), MetricsError> {
    config.validate().map_err(MetricsError::Synth)
}

/// `(2 / len) * sum r[n] e^{-j w t_n}` over `start..start + len`.
fn correlate(r: &[f64], start: usize, len: usize, fc: f64, fs: f64) -> Complex<f64> {
    let mut acc = Complex::new(0.0, 0.0);
    for n in start..start + len {
        let th = 2.0 * PI * fc * (n as f64 / fs);
        acc += Complex::new(th.cos(), -th.sin()) * r[n];
    }
    acc * (2.0 / len as f64)
}

/// Coherent downconversion by `f_c` followed by per-symbol integrate-and-dump
/// (or matched filtering for shaped pulses); one complex point per symbol.
/// Points are divided by `amplitude * signal.gain`.
pub fn extract_constellation<T: Scalar>(
    signal: &SampledSignal<T>,
    config: &SchemeConfig,
) -> Result<Vec<Complex<T>>, MetricsError> {
    let raw = symbol_points(signal, config)?;
    let k = config.amplitude * signal.gain.as_f64();
    Ok(raw
        .into_iter()
        .map(|z| Complex::new(T::lit(z.re / k), T::lit(z.im / k)))
        .collect())
}

fn symbol_points<T: Scalar>(signal: &SampledSignal<T>, config: &SchemeConfig) -> Result<Vec<Complex<f64>>, MetricsError> {
    check_band(config)?;
    let sps = config.samples_per_symbol;
    let r = real_samples(signal, config.sample_count())?;
    let fs = config.sample_rate();
    let fc = config.carrier_hz;
    match config.pulse {
        PulseShape::RootRaisedCosine { rolloff, span_symbols } if config.scheme.is_linear() => {
            let taps = rrc_taps(rolloff, sps, span_symbols);
            let half = taps.len() / 2;
            let n_total = config.sample_count();
            let points = (0..config.symbols)
                .map(|k| {
                    let center = k * sps + sps / 2;
                    let mut acc = Complex::new(0.0, 0.0);
                    for (j, h) in taps.iter().enumerate() {
                        let n = center + j;
                        if n < half || n - half >= n_total {
                            continue;
                        }
                        let n = n - half;
                        let th = 2.0 * PI * fc * (n as f64 / fs);
                        acc += Complex::new(th.cos(), -th.sin()) * (2.0 * r[n] * h);
                    }
                    acc / sps as f64
                })
                .collect();
            Ok(points)
        }
        _ => Ok((0..config.symbols)
            .map(|k| correlate(&r, k * sps, sps, fc, fs))
            .collect()),
    }
}

fn push_label(out: &mut Vec<bool>, label: usize, width: usize) {
    out.extend(uint_to_bits(label, width));
}

/// Recovers bits from `received` with the scheme's coherent decision rule.
/// `reference` is the noiseless transmitted signal; its `gain` fixes the
/// decision thresholds.
pub fn demodulate<T: Scalar>(
    received: &SampledSignal<T>,
    config: &SchemeConfig,
    reference: &SampledSignal<T>,
) -> Result<Vec<bool>, MetricsError> {
    if reference.origin_bits.is_none() || !config.carries_bits() {
        return Err(MetricsError::MissingGroundTruth);
    }
    check_band(config)?;
    let scale = config.amplitude * reference.gain.as_f64();
    let sps = config.samples_per_symbol;
    let fs = config.sample_rate();
    let fc = config.carrier_hz;
    let k = config.bits_per_symbol();
    let mut bits = Vec::with_capacity(config.bit_count());

    if let Some(alphabet) = reference_alphabet(&config.scheme) {
        for z in symbol_points(received, config)? {
            push_label(&mut bits, alphabet.nearest(z / scale), k);
        }
        return Ok(bits);
    }

    let r = real_samples(received, config.sample_count())?;
    match config.scheme {
        Scheme::Am => {
            let m = config.am_index;
            for z in symbol_points(received, config)? {
                let env = z.re / scale;
                bits.push((env - (1.0 - m)).abs() < (env - (1.0 + m)).abs());
            }
        }
        Scheme::Pm => {
            let kp = config.pm_deviation;
            let zero = Complex::from_polar(1.0, kp);
            let one = Complex::from_polar(1.0, -kp);
            for z in symbol_points(received, config)? {
                let z = z / scale;
                bits.push((z - one).norm_sqr() < (z - zero).norm_sqr());
            }
        }
        Scheme::Fm | Scheme::Msk | Scheme::Gmsk => {
            let half = sps / 2;
            for s in 0..config.symbols {
                let start = s * sps;
                let z1 = correlate(&r, start, half, fc, fs);
                let z2 = correlate(&r, start + half, sps - half, fc, fs);
                bits.push((z2 * z1.conj()).arg() < 0.0);
            }
        }
        Scheme::Bfsk | Scheme::Fsk => {
            let order = 1 << k;
            let tones: Vec<f64> = (0..order).map(|d| config.fsk_tone(d, order)).collect();
            for s in 0..config.symbols {
                let start = s * sps;
                let mut best = (0, f64::NEG_INFINITY);
                for (d, f) in tones.iter().enumerate() {
                    let c: f64 = (start..start + sps)
                        .map(|n| r[n] * (2.0 * PI * f * (n as f64 / fs)).cos())
                        .sum();
                    if c > best.1 {
                        best = (d, c);
                    }
                }
                push_label(&mut bits, gray_encode(best.0), k);
            }
        }
        Scheme::Chirp => {
            let psi: Vec<f64> = (0..sps).map(|o| chirp_phase(config, o)).collect();
            for s in 0..config.symbols {
                let start = s * sps;
                let (mut up, mut down) = (0.0, 0.0);
                for (o, p) in psi.iter().enumerate() {
                    let n = start + o;
                    let th = 2.0 * PI * fc * (n as f64 / fs);
                    up += r[n] * (th + p).cos();
                    down += r[n] * (th - p).cos();
                }
                bits.push(down > up);
            }
        }
        Scheme::Ook | Scheme::Bpsk | Scheme::Qpsk | Scheme::Qam(_) => unreachable!("linear schemes handled above"),
        Scheme::Formula(_) => return Err(MetricsError::NeedsCorrelationReceiver),
    }
    Ok(bits)
}

/// Minimum-distance receiver for formula waveforms: per symbol, the label
/// whose noiseless segment `g * s` maximizes `<r, g s> - |g s|^2 / 2`.
pub fn correlation_receiver<T: Scalar>(
    received: &SampledSignal<T>,
    expr: &Expr,
    ctx: &FormulaContext<T>,
    gain: T,
) -> Result<Vec<bool>, MetricsError> {
    let sps = ctx.samples_per_symbol;
    let symbols = ctx.labels.len();
    let r = real_samples(received, symbols * sps)?;
    let g = gain.as_f64();
    let order = ctx.order();
    let candidates: Vec<_> = (0..order).map(|l| ctx.candidate_context(l)).collect();
    let opts = EvalOptions::default();

    let score = |seg: &[T], start: usize| -> f64 {
        let mut dot = 0.0;
        let mut energy = 0.0;
        for (o, v) in seg.iter().enumerate() {
            let s = g * v.as_f64();
            dot += r[start + o] * s;
            energy += s * s;
        }
        dot - 0.5 * energy
    };

    let decide_one = |sym: usize, state: &IntegralState<T>| -> Result<(usize, IntegralState<T>), MetricsError> {
        let grid = TimeGrid::segment(ctx.sample_rate, sym * sps, sps);
        let mut best: Option<(usize, f64, IntegralState<T>)> = None;
        for (label, cand) in candidates.iter().enumerate() {
            let mut st = state.clone();
            let ev = evaluate_segment(expr, cand, &grid, &opts, &mut st)?;
            let sc = score(&ev.samples, sym * sps);
            if best.as_ref().is_none_or(|b| sc > b.1) {
                best = Some((label, sc, st));
            }
        }
        let (label, _, st) = best.expect("at least one candidate");
        Ok((label, st))
    };

    let labels: Vec<usize> = if expr.contains_integral() {
        let mut state = IntegralState::new();
        let mut out = Vec::with_capacity(symbols);
        for sym in 0..symbols {
            let (label, st) = decide_one(sym, &state)?;
            state = st;
            out.push(label);
        }
        out
    } else {
        (0..symbols)
            .into_par_iter()
            .map(|sym| decide_one(sym, &IntegralState::new()).map(|(l, _)| l))
            .collect::<Result<_, _>>()?
    };
    let mut bits = Vec::with_capacity(symbols * ctx.bits_per_symbol);
    for l in labels {
        push_label(&mut bits, l, ctx.bits_per_symbol);
    }
    Ok(bits)
}

/// Result of [`ber`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitErrors {
    pub errors: usize,
    pub total: usize,
}

impl BitErrors {
    pub fn rate(&self) -> f64 {
        self.errors as f64 / self.total as f64
    }
}

/// Hamming distance over length.
pub fn ber(tx: &[bool], rx: &[bool]) -> Result<f64, MetricsError> {
    bit_errors(tx, rx).map(|e| e.rate())
}

pub fn bit_errors(tx: &[bool], rx: &[bool]) -> Result<BitErrors, MetricsError> {
    if tx.len() != rx.len() {
        return Err(MetricsError::LengthMismatch {
            left: tx.len(),
            right: rx.len(),
        });
    }
    if tx.is_empty() {
        return Err(MetricsError::NoBits);
    }
    Ok(BitErrors {
        errors: tx.iter().zip(rx).filter(|(a, b)| a != b).count(),
        total: tx.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ber_counts() {
        let tx: Vec<bool> = (0..1000).map(|i| i % 3 == 0).collect();
        assert_eq!(ber(&tx, &tx).unwrap(), 0.0);
        let inv: Vec<bool> = tx.iter().map(|b| !b).collect();
        assert_eq!(ber(&tx, &inv).unwrap(), 1.0);
        let mut three = tx.clone();
        for i in [5, 500, 999] {
            three[i] = !three[i];
        }
        assert_eq!(ber(&tx, &three).unwrap(), 0.003);
        assert!(ber(&tx, &tx[1..]).is_err());
        assert_eq!(ber(&[], &[]), Err(MetricsError::NoBits));
    }
}
