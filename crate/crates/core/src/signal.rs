use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

/// Real or complex sample storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum Samples<T> {
    Real(Vec<T>),
    Complex(Vec<Complex<T>>),
}

impl<T: Scalar> Samples<T> {
    pub fn len(&self) -> usize {
        match self {
            Samples::Real(v) => v.len(),
            Samples::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Samples::Complex(_))
    }

    /// Mean of `|x|^2`, summed sequentially.
    pub fn power(&self) -> T {
        match self {
            Samples::Real(v) => crate::mean_square(v),
            Samples::Complex(v) => {
                if v.is_empty() {
                    return T::zero();
                }
                let mut acc = T::zero();
                for z in v {
                    acc += z.norm_sqr();
                }
                acc / T::from_usize_lossy(v.len())
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        match self {
            Samples::Real(v) => v.iter().all(|x| x.is_finite()),
            Samples::Complex(v) => v.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }

    pub fn scale(&mut self, k: T) {
        match self {
            Samples::Real(v) => v.iter_mut().for_each(|x| *x *= k),
            Samples::Complex(v) => v.iter_mut().for_each(|z| *z = *z * k),
        }
    }

    /// Samples as complex values (real signals get zero imaginary part).
    pub fn to_complex(&self) -> Vec<Complex<T>> {
        match self {
            Samples::Real(v) => v.iter().map(|&x| Complex::new(x, T::zero())).collect(),
            Samples::Complex(v) => v.clone(),
        }
    }

    pub fn as_real(&self) -> Option<&[T]> {
        match self {
            Samples::Real(v) => Some(v),
            Samples::Complex(_) => None,
        }
    }

    /// Element-wise `self - other`.
    pub fn difference(&self, other: &Samples<T>) -> Result<Samples<T>, SignalError> {
        if self.len() != other.len() {
            return Err(SignalError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(match (self, other) {
            (Samples::Real(a), Samples::Real(b)) => {
                Samples::Real(a.iter().zip(b).map(|(x, y)| *x - *y).collect())
            }
            _ => Samples::Complex(
                self.to_complex()
                    .into_iter()
                    .zip(other.to_complex())
                    .map(|(x, y)| x - y)
                    .collect(),
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignalError {
    #[error("signal has zero power")]
    ZeroPower,
    #[error("signals differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("target power must be positive and finite")]
    BadTarget,
}

/// Uniformly sampled waveform plus the data that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal<T> {
    pub samples: Samples<T>,
    pub sample_rate: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_rate: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits_per_symbol: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_bits: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_symbols: Option<Vec<Complex<T>>>,
    /// Product of all power-normalization scale factors applied so far.
    pub gain: T,
    /// Guarded divisions recorded while synthesizing from a formula.
    #[serde(default)]
    pub guard_count: usize,
}

impl<T: Scalar> SampledSignal<T> {
    pub fn real(samples: Vec<T>, sample_rate: T) -> Self {
        Self::new(Samples::Real(samples), sample_rate)
    }

    pub fn complex(samples: Vec<Complex<T>>, sample_rate: T) -> Self {
        Self::new(Samples::Complex(samples), sample_rate)
    }

    fn new(samples: Samples<T>, sample_rate: T) -> Self {
        Self {
            samples,
            sample_rate,
            symbol_rate: None,
            bits_per_symbol: None,
            origin_bits: None,
            origin_symbols: None,
            gain: T::one(),
            guard_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn power(&self) -> T {
        self.samples.power()
    }

    /// Copy of this signal's metadata carrying different samples.
    pub fn with_samples(&self, samples: Samples<T>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
            symbol_rate: self.symbol_rate,
            bits_per_symbol: self.bits_per_symbol,
            origin_bits: self.origin_bits.clone(),
            origin_symbols: self.origin_symbols.clone(),
            gain: self.gain,
            guard_count: self.guard_count,
        }
    }

    /// Number of whole symbols, when the symbol rate is known.
    pub fn symbol_count(&self) -> Option<usize> {
        let rs = self.symbol_rate?;
        let sps = (self.sample_rate / rs).round().to_usize()?;
        (sps > 0).then(|| self.len() / sps)
    }
}

/// Output of [`normalize_power`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized<T> {
    pub signal: SampledSignal<T>,
    /// Amplitude factor that was applied.
    pub scale: T,
}

/// Scale `signal` so its mean square equals `target_power`.
pub fn normalize_power<T: Scalar>(
    signal: &SampledSignal<T>,
    target_power: T,
) -> Result<Normalized<T>, SignalError> {
    if !(target_power > T::zero() && target_power.is_finite()) {
        return Err(SignalError::BadTarget);
    }
    let p = signal.power();
    if !(p > T::zero()) || !p.is_finite() {
        return Err(SignalError::ZeroPower);
    }
    let scale = (target_power / p).sqrt();
    let mut out = signal.clone();
    out.samples.scale(scale);
    out.gain *= scale;
    Ok(Normalized { signal: out, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn halves_constant_signal() {
        let s = SampledSignal::real(vec![2.0f64; 4], 1.0);
        let n = normalize_power(&s, 1.0).unwrap();
        assert_eq!(n.signal.samples, Samples::Real(vec![1.0; 4]));
        assert_eq!(n.scale, 0.5);
        assert_eq!(n.signal.gain, 0.5);
    }

    #[test]
    fn unit_power_is_identity() {
        let s = SampledSignal::real(vec![1.0f64, -1.0, 1.0, -1.0], 1.0);
        let n = normalize_power(&s, 1.0).unwrap();
        let Samples::Real(v) = &n.signal.samples else { unreachable!() };
        for (a, b) in v.iter().zip([1.0, -1.0, 1.0, -1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_power_rejected() {
        let s = SampledSignal::real(vec![0.0f64; 8], 1.0);
        assert_eq!(normalize_power(&s, 1.0).unwrap_err(), SignalError::ZeroPower);
    }

    #[test]
    fn complex_power() {
        let s = SampledSignal::complex(vec![Complex::new(3.0f64, 4.0); 3], 1.0);
        assert_eq!(s.power(), 25.0);
    }

    proptest! {
        #[test]
        fn normalized_power_hits_target(
            xs in proptest::collection::vec(-50.0f64..50.0, 2..400),
            target in 0.01f64..100.0,
        ) {
            prop_assume!(xs.iter().any(|x| x.abs() > 1e-3));
            let s = SampledSignal::real(xs, 10.0);
            let n = normalize_power(&s, target).unwrap();
            let p = n.signal.power();
            prop_assert!(((p - target) / target).abs() < 1e-6);
        }
    }
}
