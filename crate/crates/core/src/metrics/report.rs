use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::demod::{bit_errors, correlation_receiver, demodulate, extract_constellation};
use super::efficiency::{spectral_efficiency_measured, spectral_efficiency_theoretical};
use super::psd::{occupied_bandwidth, spectrogram, welch_psd, PsdEstimate, Spectrogram, Window};
use super::MetricsError;
use crate::channel::{apply_channel, ChannelConfig};
use crate::dsl::CorpusEntry;
use crate::signal::SampledSignal;
use crate::synth::{transmit, SchemeConfig, Transmission};
use crate::to_db;

/// Estimator settings shared by every row of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsParams {
    pub welch_segment: usize,
    pub welch_overlap: f64,
    pub window: Window,
    pub obw_fraction: f64,
    pub spectrogram_fft: usize,
    pub spectrogram_hop: usize,
    /// Mean-square power every waveform is scaled to before the channel.
    pub target_power: f64,
}

impl Default for MetricsParams {
    fn default() -> Self {
        Self {
            welch_segment: 256,
            welch_overlap: 0.5,
            window: Window::Hann,
            obw_fraction: 0.99,
            spectrogram_fft: 256,
            spectrogram_hop: 128,
            target_power: 1.0,
        }
    }
}

/// Serializes infinite dB values as the string `"inf"`.
mod db {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t}"))),
        }
    }
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub modulation: String,
    /// Measured SNR: input power over added-noise power.
    #[serde(with = "db")]
    pub snr_db: f64,
    pub target_snr_db: Option<f64>,
    pub ber: Option<f64>,
    pub bit_errors: Option<usize>,
    pub bits: Option<usize>,
    pub spectral_efficiency: Option<f64>,
    pub spectral_efficiency_theoretical: Option<f64>,
    pub occupied_bandwidth_hz: Option<f64>,
    pub guard_count: usize,
    pub data_seed: u64,
    pub channel_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub artifacts: BTreeMap<String, String>,
}

impl MetricsReport {
    fn failed(config: &SchemeConfig, channel: &ChannelConfig, err: &MetricsError) -> Self {
        Self {
            modulation: config.scheme.to_string(),
            snr_db: f64::NAN,
            target_snr_db: channel.target_snr_db,
            ber: None,
            bit_errors: None,
            bits: None,
            spectral_efficiency: None,
            spectral_efficiency_theoretical: None,
            occupied_bandwidth_hz: None,
            guard_count: 0,
            data_seed: config.seed,
            channel_seed: channel.seed,
            error: Some(err.to_string()),
            artifacts: BTreeMap::new(),
        }
    }
}

/// A report row plus the data behind its artifacts.
#[derive(Debug, Clone)]
pub struct SchemeEvaluation {
    pub report: MetricsReport,
    pub transmission: Transmission<f64>,
    pub received: SampledSignal<f64>,
    /// PSD of the normalized transmitted waveform.
    pub psd: PsdEstimate<f64>,
    pub constellation: Vec<Complex<f64>>,
    pub spectrogram: Option<Spectrogram<f64>>,
}

/// Recovered bits for `received`, using the formula receiver when needed.
pub fn recover_bits(tx: &Transmission<f64>, received: &SampledSignal<f64>) -> Result<Vec<bool>, MetricsError> {
    match &tx.formula {
        Some(f) => correlation_receiver(received, &f.resolved.expr, &f.context, tx.signal.gain),
        None => demodulate(received, &tx.config, &tx.signal),
    }
}

/// Synthesis, normalization, channel and metrics for one scheme.
pub fn evaluate_scheme(
    config: &SchemeConfig,
    channel: &ChannelConfig,
    params: &MetricsParams,
    corpus: &[CorpusEntry],
    with_spectrogram: bool,
) -> Result<SchemeEvaluation, MetricsError> {
    let tx = transmit::<f64>(config, corpus)?.normalized(params.target_power)?;
    let out = apply_channel(&tx.signal, channel)?;
    let snr_db = if out.noise_power > 0.0 {
        let noise = out.received.samples.difference(&out.faded.samples)?;
        to_db(tx.signal.power() / noise.power())
    } else {
        f64::INFINITY
    };

    let (ber, errors, bits) = if config.carries_bits() {
        let rx = recover_bits(&tx, &out.received)?;
        let e = bit_errors(tx.signal.origin_bits.as_deref().unwrap_or_default(), &rx)?;
        (Some(e.rate()), Some(e.errors), Some(e.total))
    } else {
        (None, None, None)
    };

    let psd = welch_psd(&tx.signal, params.welch_segment, params.welch_overlap, params.window)?;
    let obw = occupied_bandwidth(&psd, params.obw_fraction)?;
    let (eta, eta_theory) = if config.carries_bits() {
        let order = 1u64 << config.bits_per_symbol();
        (
            Some(spectral_efficiency_measured(config.bit_rate(), obw)?),
            Some(spectral_efficiency_theoretical(order)?),
        )
    } else {
        (None, None)
    };
    let constellation = extract_constellation(&out.received, config)?;
    let spectrogram = if with_spectrogram {
        Some(spectrogram(&tx.signal, params.spectrogram_fft, params.spectrogram_hop)?)
    } else {
        None
    };

    let report = MetricsReport {
        modulation: config.scheme.to_string(),
        snr_db,
        target_snr_db: channel.target_snr_db,
        ber,
        bit_errors: errors,
        bits,
        spectral_efficiency: eta,
        spectral_efficiency_theoretical: eta_theory,
        occupied_bandwidth_hz: Some(obw),
        guard_count: tx.signal.guard_count,
        data_seed: config.seed,
        channel_seed: channel.seed,
        error: None,
        artifacts: BTreeMap::new(),
    };
    Ok(SchemeEvaluation {
        report,
        transmission: tx,
        received: out.received,
        psd,
        constellation,
        spectrogram,
    })
}

/// Known-vs-generated comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub channel: ChannelConfig,
    pub params: MetricsParams,
    pub rows: Vec<MetricsReport>,
}

pub const COMPARISON_COLUMNS: [&str; 5] = ["modulation", "snr_db", "ber", "spectral_eff", "bandwidth_hz"];

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_infinite() && x > 0.0 => "inf".to_string(),
        Some(x) if x.is_finite() => x.to_string(),
        _ => String::new(),
    }
}

impl ComparisonTable {
    pub fn row(&self, modulation: &str) -> Option<&MetricsReport> {
        self.rows.iter().find(|r| r.modulation == modulation)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(COMPARISON_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.modulation.clone(),
                cell(Some(r.snr_db)),
                cell(r.ber),
                cell(r.spectral_efficiency),
                cell(r.occupied_bandwidth_hz),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable table")
    }
}

/// Evaluates every scheme under the same channel (same seed) and parameters.
/// Rows run in parallel; failures are recorded in their row.
pub fn compare(
    schemes: &[SchemeConfig],
    channel: &ChannelConfig,
    params: &MetricsParams,
    corpus: &[CorpusEntry],
) -> ComparisonTable {
    let rows = schemes
        .par_iter()
        .map(|cfg| match evaluate_scheme(cfg, channel, params, corpus, false) {
            Ok(ev) => ev.report,
            Err(e) => MetricsReport::failed(cfg, channel, &e),
        })
        .collect();
    ComparisonTable {
        channel: channel.clone(),
        params: params.clone(),
        rows,
    }
}
