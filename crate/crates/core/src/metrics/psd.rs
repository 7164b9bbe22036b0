use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::signal::{SampledSignal, Samples};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients<T: Scalar>(self, n: usize) -> Vec<T> {
        match self {
            Window::Rectangular => vec![T::one(); n],
            Window::Hann => (0..n)
                .map(|k| {
                    let x = T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(n);
                    T::lit(0.5) - T::lit(0.5) * x.cos()
                })
                .collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Hann => "hann",
            Window::Rectangular => "rectangular",
        }
    }
}

/// Power spectral density estimate. Real signals give a one-sided spectrum
/// from 0 to fs/2; complex ones a two-sided spectrum in ascending frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate<T> {
    pub frequencies: Vec<T>,
    pub density: Vec<T>,
    pub segment_length: usize,
    pub overlap_fraction: T,
    pub window: Window,
    /// Bin spacing `fs / segment_length`.
    pub resolution: T,
}

impl<T: Scalar> PsdEstimate<T> {
    /// `sum(density) * resolution`, the estimated signal power.
    pub fn integrated_power(&self) -> T {
        let mut acc = T::zero();
        for d in &self.density {
            acc += *d;
        }
        acc * self.resolution
    }

    pub fn peak_frequency(&self) -> T {
        let mut best = 0;
        for (i, d) in self.density.iter().enumerate() {
            if *d > self.density[best] {
                best = i;
            }
        }
        self.frequencies[best]
    }
}

/// Time-frequency power matrix: `power[bin][frame]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram<T> {
    pub frequencies: Vec<T>,
    pub times: Vec<T>,
    pub power: Vec<Vec<T>>,
}

impl<T: Scalar> Spectrogram<T> {
    /// Per-bin mean over frames.
    pub fn time_average(&self) -> Vec<T> {
        let frames = T::from_usize_lossy(self.times.len().max(1));
        self.power
            .iter()
            .map(|row| {
                let mut acc = T::zero();
                for v in row {
                    acc += *v;
                }
                acc / frames
            })
            .collect()
    }
}

/// Windowed periodograms of successive frames, density-scaled.
struct Frames<T> {
    frequencies: Vec<T>,
    /// One spectrum per frame, already folded/ordered.
    spectra: Vec<Vec<T>>,
    starts: Vec<usize>,
}

fn periodograms<T: Scalar>(
    signal: &SampledSignal<T>,
    n: usize,
    hop: usize,
    window: Window,
) -> Frames<T> {
    let fs = signal.sample_rate;
    let w: Vec<T> = window.coefficients(n);
    let mut wss = T::zero();
    for v in &w {
        wss += *v * *v;
    }
    let scale = T::one() / (fs * wss);
    let data = signal.samples.to_complex();
    let is_real = matches!(signal.samples, Samples::Real(_));
    let fft = FftPlanner::<T>::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    let starts: Vec<usize> = (0..=data.len() - n).step_by(hop).collect();
    let fsn = fs / T::from_usize_lossy(n);

    let (frequencies, order): (Vec<T>, Vec<usize>) = if is_real {
        (0..=n / 2).map(|k| (T::from_usize_lossy(k) * fsn, k)).unzip()
    } else {
        let neg = n - n / 2;
        (0..n)
            .map(|i| {
                let k = (i + n / 2) % n;
                let f = if k >= neg {
                    -T::from_usize_lossy(n - k) * fsn
                } else {
                    T::from_usize_lossy(k) * fsn
                };
                (f, k)
            })
            .unzip()
    };

    let spectra = starts
        .iter()
        .map(|&s| {
            for (b, (x, wk)) in buf.iter_mut().zip(data[s..s + n].iter().zip(&w)) {
                *b = *x * *wk;
            }
            fft.process(&mut buf);
            order
                .iter()
                .map(|&k| {
                    let mut p = buf[k].norm_sqr() * scale;
                    if is_real && k != 0 && !(n % 2 == 0 && k == n / 2) {
                        p = p + p;
                    }
                    p
                })
                .collect()
        })
        .collect();
    Frames {
        frequencies,
        spectra,
        starts,
    }
}

/// Welch estimate: averaged modified periodograms of overlapping segments.
pub fn welch_psd<T: Scalar>(
    signal: &SampledSignal<T>,
    segment_length: usize,
    overlap_fraction: T,
    window: Window,
) -> Result<PsdEstimate<T>, MetricsError> {
    if segment_length < 2 {
        return Err(MetricsError::InvalidParameter("segment_length must be at least 2".into()));
    }
    if segment_length > signal.len() {
        return Err(MetricsError::SegmentTooLong {
            segment: segment_length,
            len: signal.len(),
        });
    }
    if !(overlap_fraction >= T::zero() && overlap_fraction <= T::lit(0.9)) {
        return Err(MetricsError::InvalidParameter("overlap_fraction must lie in [0, 0.9]".into()));
    }
    let step = (T::from_usize_lossy(segment_length) * (T::one() - overlap_fraction))
        .round()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let frames = periodograms(signal, segment_length, step, window);
    let count = T::from_usize_lossy(frames.spectra.len());
    let mut density = vec![T::zero(); frames.frequencies.len()];
    for spec in &frames.spectra {
        for (d, p) in density.iter_mut().zip(spec) {
            *d += *p;
        }
    }
    density.iter_mut().for_each(|d| *d /= count);
    Ok(PsdEstimate {
        frequencies: frames.frequencies,
        density,
        segment_length,
        overlap_fraction,
        window,
        resolution: signal.sample_rate / T::from_usize_lossy(segment_length),
    })
}

/// Hann-windowed short-time power spectrum with the same density scaling
/// as [`welch_psd`].
pub fn spectrogram<T: Scalar>(
    signal: &SampledSignal<T>,
    fft_length: usize,
    hop: usize,
) -> Result<Spectrogram<T>, MetricsError> {
    if fft_length < 2 || hop == 0 {
        return Err(MetricsError::InvalidParameter(
            "spectrogram needs fft_length >= 2 and hop >= 1".into(),
        ));
    }
    if fft_length > signal.len() {
        return Err(MetricsError::SegmentTooLong {
            segment: fft_length,
            len: signal.len(),
        });
    }
    let frames = periodograms(signal, fft_length, hop, Window::Hann);
    let bins = frames.frequencies.len();
    let power = (0..bins)
        .map(|b| frames.spectra.iter().map(|s| s[b]).collect())
        .collect();
    let half = T::from_usize_lossy(fft_length) / T::lit(2.0);
    let times = frames
        .starts
        .iter()
        .map(|&s| (T::from_usize_lossy(s) + half) / signal.sample_rate)
        .collect();
    Ok(Spectrogram {
        frequencies: frames.frequencies,
        times,
        power,
    })
}

/// Width of the band holding `fraction` of the power, found by trimming an
/// equal share of the remainder from each end of the spectrum. The result
/// counts whole bins, so a single occupied bin yields one bin width.
pub fn occupied_bandwidth<T: Scalar>(psd: &PsdEstimate<T>, fraction: T) -> Result<T, MetricsError> {
    if !(fraction > T::zero() && fraction < T::one()) {
        return Err(MetricsError::InvalidParameter("fraction must lie in (0, 1)".into()));
    }
    let mut total = T::zero();
    for d in &psd.density {
        total += *d;
    }
    if !(total > T::zero()) || !total.is_finite() {
        return Err(MetricsError::DegeneratePsd);
    }
    let tail = (T::one() - fraction) / T::lit(2.0) * total;
    let mut acc = T::zero();
    let mut lo = 0;
    for (i, d) in psd.density.iter().enumerate() {
        acc += *d;
        if acc > tail {
            lo = i;
            break;
        }
    }
    acc = T::zero();
    let mut hi = psd.density.len() - 1;
    for (i, d) in psd.density.iter().enumerate().rev() {
        acc += *d;
        if acc > tail {
            hi = i;
            break;
        }
    }
    let bins = if hi >= lo { hi - lo + 1 } else { 1 };
    Ok(T::from_usize_lossy(bins) * psd.resolution)
}
