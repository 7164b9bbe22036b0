//! AWGN, tapped-delay multipath and Rayleigh block fading.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Weibull};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{purpose, stream};
use crate::signal::{SampledSignal, Samples, SignalError};
use crate::{from_db, to_db, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("signal has zero power")]
    ZeroPower,
    #[error("tap delay {delay} exceeds signal length {len}")]
    DelayExceedsLength { delay: usize, len: usize },
    #[error("invalid channel config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tap {
    pub delay_samples: usize,
    pub gain: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Tap {
    pub const DIRECT: Tap = Tap {
        delay_samples: 0,
        gain: 1.0,
        phase: 0.0,
    };

    pub fn new(delay_samples: usize, gain: f64, phase: f64) -> Self {
        Self {
            delay_samples,
            gain,
            phase,
        }
    }
}

/// Rayleigh block fading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fading {
    pub enabled: bool,
    pub block_length_samples: usize,
    /// Rayleigh scale parameter; `E[alpha^2] = 2 sigma^2`.
    pub sigma: f64,
}

impl Default for Fading {
    fn default() -> Self {
        Self {
            enabled: false,
            block_length_samples: 4_800,
            sigma: std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// `None` means no noise is added.
    pub target_snr_db: Option<f64>,
    pub taps: Vec<Tap>,
    pub fading: Fading,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            target_snr_db: None,
            taps: vec![Tap::DIRECT],
            fading: Fading::default(),
            seed: 0,
        }
    }
}

/// Per-sample SNR used for the known-vs-generated comparison table.
pub const COMPARISON_SNR_DB: f64 = 0.0;

impl ChannelConfig {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn awgn(target_snr_db: f64, seed: u64) -> Self {
        Self {
            target_snr_db: Some(target_snr_db),
            seed,
            ..Self::default()
        }
    }

    /// AWGN-only channel at the comparison operating point.
    pub fn comparison(seed: u64) -> Self {
        Self::awgn(COMPARISON_SNR_DB, seed)
    }

    /// Three-path channel with Rayleigh block fading at 15 dB.
    pub fn multipath(seed: u64) -> Self {
        Self {
            target_snr_db: Some(15.0),
            taps: vec![Tap::DIRECT, Tap::new(3, 0.4, 0.0), Tap::new(7, 0.2, 0.0)],
            fading: Fading {
                enabled: true,
                ..Fading::default()
            },
            seed,
        }
    }

    /// AWGN-only channel at 15.44 dB.
    pub fn qpsk_operating_point(seed: u64) -> Self {
        Self::awgn(15.44, seed)
    }

    /// Named presets: `comparison`, `multipath`, `qpsk-15.44`, `noiseless`.
    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        match name {
            "comparison" => Some(Self::comparison(seed)),
            "multipath" => Some(Self::multipath(seed)),
            "qpsk-15.44" => Some(Self::qpsk_operating_point(seed)),
            "noiseless" => Some(Self {
                seed,
                ..Self::noiseless()
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if let Some(snr) = self.target_snr_db {
            if !snr.is_finite() {
                return Err(ChannelError::InvalidConfig("target_snr_db must be finite".into()));
            }
        }
        if self.taps.is_empty() {
            return Err(ChannelError::InvalidConfig("at least one tap is required".into()));
        }
        if self.taps.iter().any(|t| !t.gain.is_finite() || !t.phase.is_finite()) {
            return Err(ChannelError::InvalidConfig("tap gains and phases must be finite".into()));
        }
        if self.fading.enabled && (self.fading.sigma <= 0.0 || self.fading.block_length_samples == 0) {
            return Err(ChannelError::InvalidConfig(
                "fading needs sigma > 0 and a nonzero block length".into(),
            ));
        }
        Ok(())
    }

    fn is_identity_path(&self) -> bool {
        self.taps.as_slice() == [Tap::DIRECT]
    }
}

/// Adds white Gaussian noise of power `P_signal / 10^(snr/10)`.
pub fn add_awgn<T: Scalar>(
    signal: &SampledSignal<T>,
    target_snr_db: T,
    seed: u64,
) -> Result<SampledSignal<T>, ChannelError> {
    let p = signal.power();
    if !(p > T::zero()) {
        return Err(ChannelError::ZeroPower);
    }
    Ok(add_noise(signal, p / from_db(target_snr_db), seed))
}

/// Adds white Gaussian noise of the given total power. Complex signals get
/// circularly symmetric noise with half the power in each component.
pub fn add_noise<T: Scalar>(signal: &SampledSignal<T>, noise_power: T, seed: u64) -> SampledSignal<T> {
    let mut rng = stream(seed, purpose::NOISE);
    let mut draw = |sd: f64| -> T { T::lit(sd * rng.sample::<f64, _>(StandardNormal)) };
    let samples = match &signal.samples {
        Samples::Real(v) => {
            let sd = noise_power.as_f64().sqrt();
            Samples::Real(v.iter().map(|&x| x + draw(sd)).collect())
        }
        Samples::Complex(v) => {
            let sd = (noise_power.as_f64() / 2.0).sqrt();
            Samples::Complex(
                v.iter()
                    .map(|&z| {
                        let re = draw(sd);
                        let im = draw(sd);
                        z + Complex::new(re, im)
                    })
                    .collect(),
            )
        }
    };
    signal.with_samples(samples)
}

/// Sum of delayed, scaled copies. Real signals weight each copy by
/// `gain * cos(phase)`, complex ones by `gain * e^{j phase}`.
pub fn apply_multipath<T: Scalar>(signal: &SampledSignal<T>, taps: &[Tap]) -> Result<SampledSignal<T>, ChannelError> {
    let len = signal.len();
    if let Some(t) = taps.iter().find(|t| t.delay_samples >= len) {
        return Err(ChannelError::DelayExceedsLength {
            delay: t.delay_samples,
            len,
        });
    }
    let samples = match &signal.samples {
        Samples::Real(x) => {
            let mut y = vec![T::zero(); len];
            for tap in taps {
                let w = T::lit(tap.gain * tap.phase.cos());
                for (out, v) in y[tap.delay_samples..].iter_mut().zip(x) {
                    *out += w * *v;
                }
            }
            Samples::Real(y)
        }
        Samples::Complex(x) => {
            let mut y = vec![Complex::new(T::zero(), T::zero()); len];
            for tap in taps {
                let w = Complex::from_polar(T::lit(tap.gain), T::lit(tap.phase));
                for (out, v) in y[tap.delay_samples..].iter_mut().zip(x) {
                    *out += w * *v;
                }
            }
            Samples::Complex(y)
        }
    };
    Ok(signal.with_samples(samples))
}

/// Rayleigh attenuation factors, one per block.
pub fn fading_gains(blocks: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, purpose::FADING);
    // Weibull with shape 2 and scale sigma * sqrt(2) is Rayleigh(sigma)
    let dist = Weibull::new(sigma * std::f64::consts::SQRT_2, 2.0).expect("positive Rayleigh scale");
    (0..blocks).map(|_| dist.sample(&mut rng)).collect()
}

/// Multiplies each block of `block_length_samples` by an i.i.d. Rayleigh draw.
pub fn apply_fading<T: Scalar>(signal: &SampledSignal<T>, fading: &Fading, seed: u64) -> SampledSignal<T> {
    if !fading.enabled {
        return signal.clone();
    }
    let block = fading.block_length_samples.max(1);
    let gains = fading_gains(signal.len().div_ceil(block), fading.sigma, seed);
    let mut samples = signal.samples.clone();
    match &mut samples {
        Samples::Real(v) => v.iter_mut().enumerate().for_each(|(n, x)| *x *= T::lit(gains[n / block])),
        Samples::Complex(v) => v
            .iter_mut()
            .enumerate()
            .for_each(|(n, z)| *z = *z * T::lit(gains[n / block])),
    }
    signal.with_samples(samples)
}

/// `10 log10(P(clean) / P(received - clean))`; `+inf` when the two are equal.
pub fn measure_snr<T: Scalar>(clean: &SampledSignal<T>, received: &SampledSignal<T>) -> Result<T, ChannelError> {
    let noise = received.samples.difference(&clean.samples)?;
    let pn = noise.power();
    if pn == T::zero() {
        return Ok(T::infinity());
    }
    Ok(to_db(clean.power() / pn))
}

/// Result of [`apply_channel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput<T> {
    pub received: SampledSignal<T>,
    /// Signal after multipath and fading, before noise.
    pub faded: SampledSignal<T>,
    pub noise_power: T,
}

/// Multipath, then fading, then noise sized against the input signal's power.
pub fn apply_channel<T: Scalar>(
    signal: &SampledSignal<T>,
    config: &ChannelConfig,
) -> Result<ChannelOutput<T>, ChannelError> {
    config.validate()?;
    let mut faded = if config.is_identity_path() {
        signal.clone()
    } else {
        apply_multipath(signal, &config.taps)?
    };
    faded = apply_fading(&faded, &config.fading, config.seed);
    let (received, noise_power) = match config.target_snr_db {
        Some(snr) => {
            let p = signal.power();
            if !(p > T::zero()) {
                return Err(ChannelError::ZeroPower);
            }
            let pn = p / from_db(T::lit(snr));
            (add_noise(&faded, pn, config.seed), pn)
        }
        None => (faded.clone(), T::zero()),
    };
    Ok(ChannelOutput {
        received,
        faded,
        noise_power,
    })
}
