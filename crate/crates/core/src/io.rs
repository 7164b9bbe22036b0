//! File formats for waveforms and metric artifacts.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{PsdEstimate, Spectrogram};
use crate::signal::{SampledSignal, Samples};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("binary waveform length {0} is not a whole number of i/q pairs")]
    Truncated(usize),
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Sidecar metadata for a binary waveform dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformMeta {
    pub sample_rate: f64,
    pub scheme: String,
    pub seed: u64,
    pub samples: usize,
    pub format: String,
}

fn iq<T: Scalar>(signal: &SampledSignal<T>) -> Vec<(T, T)> {
    match &signal.samples {
        Samples::Real(v) => v.iter().map(|x| (*x, T::zero())).collect(),
        Samples::Complex(v) => v.iter().map(|z| (z.re, z.im)).collect(),
    }
}

/// CSV with header `index,i,q`; real signals have `q = 0`.
pub fn write_waveform_csv<T: Scalar, W: Write>(writer: W, signal: &SampledSignal<T>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "i", "q"])?;
    for (n, (i, q)) in iq(signal).into_iter().enumerate() {
        w.write_record([n.to_string(), i.to_string(), q.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Little-endian interleaved `f32` i/q pairs at `path`, with metadata in
/// `path` + `.json`.
pub fn write_waveform_f32<T: Scalar>(
    path: &Path,
    signal: &SampledSignal<T>,
    scheme: &str,
    seed: u64,
) -> Result<PathBuf, IoError> {
    let mut w = create(path)?;
    let pairs = iq(signal);
    for (i, q) in &pairs {
        for v in [i, q] {
            let x = v.to_f32().unwrap_or(f32::NAN);
            w.write_all(&x.to_le_bytes()).map_err(|source| IoError::File {
                path: path.to_path_buf(),
                source,
            })?;
        }
    }
    w.flush().map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })?;
    let meta = WaveformMeta {
        sample_rate: signal.sample_rate.as_f64(),
        scheme: scheme.to_string(),
        seed,
        samples: pairs.len(),
        format: "f32le-interleaved-iq".to_string(),
    };
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    let side = PathBuf::from(side);
    let mut sw = create(&side)?;
    serde_json::to_writer_pretty(&mut sw, &meta)?;
    sw.flush().map_err(|source| IoError::File {
        path: side.clone(),
        source,
    })?;
    Ok(side)
}

/// Reads a binary dump written by [`write_waveform_f32`] as complex samples.
pub fn read_waveform_f32(path: &Path) -> Result<Vec<Complex<f32>>, IoError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| IoError::File {
            path: path.to_path_buf(),
            source,
        })?;
    if bytes.len() % 8 != 0 {
        return Err(IoError::Truncated(bytes.len()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let i = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let q = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex::new(i, q)
        })
        .collect())
}

/// CSV `freq_hz,power_density`.
pub fn write_psd_csv<T: Scalar, W: Write>(writer: W, psd: &PsdEstimate<T>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["freq_hz", "power_density"])?;
    for (f, d) in psd.frequencies.iter().zip(&psd.density) {
        w.write_record([f.to_string(), d.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// CSV matrix: header `freq_hz,<frame time>...`, then one row per bin.
pub fn write_spectrogram_csv<T: Scalar, W: Write>(writer: W, sg: &Spectrogram<T>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["freq_hz".to_string()];
    header.extend(sg.times.iter().map(|t| t.to_string()));
    w.write_record(&header)?;
    for (f, row) in sg.frequencies.iter().zip(&sg.power) {
        let mut rec = vec![f.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// CSV `i,q`, one line per symbol.
pub fn write_constellation_csv<T: Scalar, W: Write>(writer: W, points: &[Complex<T>]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["i", "q"])?;
    for p in points {
        w.write_record([p.re.to_string(), p.im.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
