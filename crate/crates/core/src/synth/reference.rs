use std::f64::consts::PI;

use num_complex::Complex;

use super::bits::{gen_bits, gray_decode, labels};
use super::constellation::Constellation;
use super::pulse::{gaussian_taps, rrc_taps, smooth_hold};
use super::scheme::{MessageSource, PulseShape, Scheme, SchemeConfig};
use super::SynthError;
use crate::signal::SampledSignal;
use crate::Scalar;

/// Symbol alphabet of a linear scheme as seen after coherent downconversion,
/// indexed by bit label.
pub fn reference_alphabet(scheme: &Scheme) -> Option<Constellation<f64>> {
    let c = |points: Vec<Complex<f64>>, k| Constellation {
        points,
        bits_per_symbol: k,
    };
    match scheme {
        Scheme::Bpsk => Some(Constellation::bpsk()),
        Scheme::Ook => Some(c(vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)], 1)),
        // phase (pi/2) d with d the Gray-decoded label
        Scheme::Qpsk => Some(c(
            (0..4).map(|l| Complex::i().powu(gray_decode(l) as u32)).collect(),
            2,
        )),
        Scheme::Qam(m) => Constellation::qam(*m).ok(),
        _ => None,
    }
}

/// Reference waveform with data bits drawn from `config.seed`.
pub fn modulate_reference<T: Scalar>(config: &SchemeConfig) -> Result<SampledSignal<T>, SynthError> {
    let bits = gen_bits(config.bit_count(), config.seed);
    modulate_reference_with_bits(config, &bits)
}

/// Reference waveform carrying the given bits.
pub fn modulate_reference_with_bits<T: Scalar>(
    config: &SchemeConfig,
    bits: &[bool],
) -> Result<SampledSignal<T>, SynthError> {
    config.validate()?;
    if let Scheme::Formula(_) = config.scheme {
        return Err(SynthError::NotReference(config.scheme.clone()));
    }
    if bits.len() != config.bit_count() {
        return Err(SynthError::BitCountMismatch {
            expected: config.bit_count(),
            got: bits.len(),
        });
    }
    let (samples, symbols) = synthesize(config, bits)?;
    let mut sig = SampledSignal::real(samples.into_iter().map(T::lit).collect(), T::lit(config.sample_rate()));
    sig.symbol_rate = Some(T::lit(config.symbol_rate));
    if config.carries_bits() {
        sig.bits_per_symbol = Some(config.bits_per_symbol());
        sig.origin_bits = Some(bits.to_vec());
    }
    sig.origin_symbols =
        symbols.map(|v| v.into_iter().map(|z| Complex::new(T::lit(z.re), T::lit(z.im))).collect());
    Ok(sig)
}

type Synthesized = (Vec<f64>, Option<Vec<Complex<f64>>>);

fn synthesize(cfg: &SchemeConfig, bits: &[bool]) -> Result<Synthesized, SynthError> {
    let n_total = cfg.sample_count();
    let sps = cfg.samples_per_symbol;
    let fs = cfg.sample_rate();
    let a = cfg.amplitude;
    let fc = cfg.carrier_hz;
    let time = |n: usize| n as f64 / fs;
    let carrier = |n: usize| 2.0 * PI * fc * time(n);
    let nrz: Vec<f64> = bits.iter().map(|&b| if b { -1.0 } else { 1.0 }).collect();
    let tone = |n: usize| (2.0 * PI * cfg.tone_hz * time(n)).cos();
    let data_mode = cfg.message == MessageSource::Data;

    if let Some(alphabet) = reference_alphabet(&cfg.scheme) {
        let syms = alphabet.map(bits)?;
        let x = match cfg.pulse {
            PulseShape::Rectangular => (0..n_total)
                .map(|n| {
                    let s = syms[n / sps];
                    let th = carrier(n);
                    a * (s.re * th.cos() - s.im * th.sin())
                })
                .collect(),
            PulseShape::RootRaisedCosine { rolloff, span_symbols } => {
                let base = shaped_baseband(&syms, &rrc_taps(rolloff, sps, span_symbols), sps);
                (0..n_total)
                    .map(|n| {
                        let th = carrier(n);
                        a * (base[n].re * th.cos() - base[n].im * th.sin())
                    })
                    .collect()
            }
        };
        return Ok((x, Some(syms)));
    }

    let out = match cfg.scheme {
        Scheme::Am => {
            let m = cfg.am_index;
            if data_mode {
                let env: Vec<f64> = nrz.iter().map(|s| 1.0 + m * s).collect();
                let x = (0..n_total).map(|n| a * env[n / sps] * carrier(n).cos()).collect();
                (x, Some(env.into_iter().map(|e| Complex::new(e, 0.0)).collect()))
            } else {
                let x = (0..n_total)
                    .map(|n| a * (1.0 + m * tone(n)) * carrier(n).cos())
                    .collect();
                (x, None)
            }
        }
        Scheme::Fm => {
            let msg: Vec<f64> = (0..n_total)
                .map(|n| if data_mode { nrz[n / sps] } else { tone(n) })
                .collect();
            let kf = cfg.k_f();
            let dt = 1.0 / fs;
            let mut integral = 0.0;
            let x = (0..n_total)
                .map(|n| {
                    if n > 0 {
                        integral += 0.5 * (msg[n - 1] + msg[n]) * dt;
                    }
                    a * (carrier(n) + kf * integral).cos()
                })
                .collect();
            (x, None)
        }
        Scheme::Pm => {
            let kp = cfg.pm_deviation;
            if data_mode {
                let x = (0..n_total).map(|n| a * (carrier(n) + kp * nrz[n / sps]).cos()).collect();
                let syms = nrz.iter().map(|s| Complex::from_polar(1.0, kp * s)).collect();
                (x, Some(syms))
            } else {
                let x = (0..n_total).map(|n| a * (carrier(n) + kp * tone(n)).cos()).collect();
                (x, None)
            }
        }
        Scheme::Bfsk | Scheme::Fsk => {
            let k = cfg.bits_per_symbol();
            let order = 1 << k;
            let tones: Vec<f64> = labels(bits, k)
                .into_iter()
                .map(|l| cfg.fsk_tone(gray_decode(l), order))
                .collect();
            let x = (0..n_total)
                .map(|n| a * (2.0 * PI * tones[n / sps] * time(n)).cos())
                .collect();
            (x, None)
        }
        Scheme::Msk | Scheme::Gmsk => {
            let freq: Vec<f64> = (0..n_total).map(|n| nrz[n / sps]).collect();
            let freq = if cfg.scheme == Scheme::Gmsk {
                smooth_hold(&freq, &gaussian_taps(cfg.gmsk_bt, sps))
            } else {
                freq
            };
            let step = PI * 0.5 / sps as f64;
            let mut phase = 0.0;
            let x = (0..n_total)
                .map(|n| {
                    let v = a * (carrier(n) + phase).cos();
                    phase += step * freq[n];
                    v
                })
                .collect();
            (x, None)
        }
        Scheme::Chirp => {
            let x = (0..n_total)
                .map(|n| a * (carrier(n) + nrz[n / sps] * chirp_phase(cfg, n % sps)).cos())
                .collect();
            (x, None)
        }
        Scheme::Ook | Scheme::Bpsk | Scheme::Qpsk | Scheme::Qam(_) | Scheme::Formula(_) => {
            unreachable!("handled above")
        }
    };
    Ok(out)
}

/// Phase deviation of an up-chirp `offset` samples into its symbol; the
/// instantaneous frequency sweeps from `f_c - W` to `f_c + W`.
pub fn chirp_phase(cfg: &SchemeConfig, offset: usize) -> f64 {
    let w = cfg.chirp_sweep();
    let tau = offset as f64 / cfg.sample_rate();
    let period = 1.0 / cfg.symbol_rate;
    2.0 * PI * (-w * tau + w * tau * tau / period)
}

/// Complex baseband `sum_k s_k p(n - k sps - sps/2)` for centered pulse taps `p`.
pub fn shaped_baseband(syms: &[Complex<f64>], taps: &[f64], sps: usize) -> Vec<Complex<f64>> {
    let n_total = syms.len() * sps;
    let half = taps.len() / 2;
    let mut out = vec![Complex::new(0.0, 0.0); n_total];
    for (k, s) in syms.iter().enumerate() {
        let center = k * sps + sps / 2;
        for (j, h) in taps.iter().enumerate() {
            let n = center + j;
            if n < half || n - half >= n_total {
                continue;
            }
            out[n - half] += s * *h;
        }
    }
    out
}
