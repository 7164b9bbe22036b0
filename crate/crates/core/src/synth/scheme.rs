use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SynthError;

/// Modulation scheme identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scheme {
    Am,
    Fm,
    Pm,
    Ook,
    Bpsk,
    Qpsk,
    /// Binary FSK.
    Bfsk,
    /// 4-ary FSK.
    Fsk,
    Msk,
    Gmsk,
    Chirp,
    Qam(usize),
    /// A corpus formula, by id.
    Formula(String),
}

pub const QAM_ORDERS: [usize; 4] = [16, 64, 128, 256];

impl Scheme {
    /// Every built-in reference scheme.
    pub fn references() -> Vec<Scheme> {
        let mut v = vec![
            Scheme::Am,
            Scheme::Fm,
            Scheme::Pm,
            Scheme::Ook,
            Scheme::Bpsk,
            Scheme::Qpsk,
            Scheme::Bfsk,
            Scheme::Fsk,
            Scheme::Msk,
            Scheme::Gmsk,
            Scheme::Chirp,
        ];
        v.extend(QAM_ORDERS.iter().map(|&m| Scheme::Qam(m)));
        v
    }

    pub fn bits_per_symbol(&self) -> Option<usize> {
        Some(match self {
            Scheme::Qpsk | Scheme::Fsk => 2,
            Scheme::Qam(m) => m.trailing_zeros() as usize,
            Scheme::Formula(_) => return None,
            _ => 1,
        })
    }

    /// Number of distinct symbols.
    pub fn order(&self) -> Option<usize> {
        self.bits_per_symbol().map(|k| 1 << k)
    }

    /// Schemes whose passband signal is `A Re{s e^{j w t}}` for a complex symbol `s`.
    pub fn is_linear(&self) -> bool {
        matches!(self, Scheme::Ook | Scheme::Bpsk | Scheme::Qpsk | Scheme::Qam(_))
    }

    pub fn is_analog(&self) -> bool {
        matches!(self, Scheme::Am | Scheme::Fm | Scheme::Pm)
    }

    pub fn formula_id(&self) -> Option<&str> {
        match self {
            Scheme::Formula(id) => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Am => f.write_str("AM"),
            Scheme::Fm => f.write_str("FM"),
            Scheme::Pm => f.write_str("PM"),
            Scheme::Ook => f.write_str("OOK"),
            Scheme::Bpsk => f.write_str("BPSK"),
            Scheme::Qpsk => f.write_str("QPSK"),
            Scheme::Bfsk => f.write_str("BFSK"),
            Scheme::Fsk => f.write_str("FSK"),
            Scheme::Msk => f.write_str("MSK"),
            Scheme::Gmsk => f.write_str("GMSK"),
            Scheme::Chirp => f.write_str("Chirp"),
            Scheme::Qam(m) => write!(f, "QAM-{m}"),
            Scheme::Formula(id) => write!(f, "formula:{id}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(id) = s.strip_prefix("formula:") {
            if id.is_empty() {
                return Err(SynthError::UnknownScheme(s.to_string()));
            }
            return Ok(Scheme::Formula(id.to_string()));
        }
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        let scheme = match key.as_str() {
            "am" => Scheme::Am,
            "fm" => Scheme::Fm,
            "pm" => Scheme::Pm,
            "ook" => Scheme::Ook,
            "bpsk" => Scheme::Bpsk,
            "qpsk" => Scheme::Qpsk,
            "bfsk" => Scheme::Bfsk,
            "fsk" | "4fsk" => Scheme::Fsk,
            "msk" => Scheme::Msk,
            "gmsk" => Scheme::Gmsk,
            "chirp" => Scheme::Chirp,
            other => {
                let digits = other
                    .strip_prefix("qam")
                    .or_else(|| other.strip_suffix("qam"))
                    .ok_or_else(|| SynthError::UnknownScheme(s.to_string()))?;
                let m: usize = digits
                    .parse()
                    .map_err(|_| SynthError::UnknownScheme(s.to_string()))?;
                if !QAM_ORDERS.contains(&m) {
                    return Err(SynthError::UnsupportedOrder(m));
                }
                Scheme::Qam(m)
            }
        };
        Ok(scheme)
    }
}

impl TryFrom<String> for Scheme {
    type Error = SynthError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.to_string()
    }
}

/// Message carried by the analog schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageSource {
    /// Bipolar NRZ data bits (bit 0 maps to +1).
    #[default]
    Data,
    /// Single tone at `tone_hz`; carries no bits.
    Tone,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PulseShape {
    #[default]
    Rectangular,
    /// Applies to the linear schemes only.
    RootRaisedCosine {
        #[serde(default = "default_rolloff")]
        rolloff: f64,
        /// Filter half-length in symbols.
        #[serde(default = "default_span")]
        span_symbols: usize,
    },
}

fn default_rolloff() -> f64 {
    0.35
}

fn default_span() -> usize {
    8
}

impl PulseShape {
    pub fn rrc() -> Self {
        PulseShape::RootRaisedCosine {
            rolloff: default_rolloff(),
            span_symbols: default_span(),
        }
    }
}

/// Everything needed to synthesize one waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub carrier_hz: f64,
    pub symbol_rate: f64,
    pub samples_per_symbol: usize,
    pub symbols: usize,
    pub amplitude: f64,
    /// Seed for the data bits.
    pub seed: u64,
    /// AM modulation index `m`.
    pub am_index: f64,
    /// FM modulation index `h`; `k_f = pi h Rs`.
    pub fm_index: f64,
    /// PM phase deviation `k_p` in radians.
    pub pm_deviation: f64,
    pub tone_hz: f64,
    pub gmsk_bt: f64,
    /// Half-width of the chirp sweep; defaults to the symbol rate.
    pub chirp_sweep_hz: Option<f64>,
    /// FSK tone spacing; defaults to the symbol rate.
    pub fsk_spacing_hz: Option<f64>,
    pub message: MessageSource,
    pub pulse: PulseShape,
    /// Scheme supplying `I(t)`, `Q(t)`, `d(t)` and `m(t)` to formula schemes.
    pub base: Scheme,
    /// Constant overrides for formula symbols.
    pub constants: BTreeMap<String, f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Bpsk,
            carrier_hz: 6_000.0,
            symbol_rate: 1_000.0,
            samples_per_symbol: 48,
            symbols: 10_000,
            amplitude: 1.0,
            seed: 0,
            am_index: 0.5,
            fm_index: 0.5,
            pm_deviation: std::f64::consts::FRAC_PI_2,
            tone_hz: 250.0,
            gmsk_bt: 0.3,
            chirp_sweep_hz: None,
            fsk_spacing_hz: None,
            message: MessageSource::Data,
            pulse: PulseShape::Rectangular,
            base: Scheme::Qpsk,
            constants: BTreeMap::new(),
        }
    }
}

impl SchemeConfig {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate * self.samples_per_symbol as f64
    }

    pub fn sample_count(&self) -> usize {
        self.symbols * self.samples_per_symbol
    }

    /// Bits per symbol, resolving formula schemes through their base.
    pub fn bits_per_symbol(&self) -> usize {
        match &self.scheme {
            Scheme::Formula(_) => self.base.bits_per_symbol().unwrap_or(1),
            s => s.bits_per_symbol().unwrap_or(1),
        }
    }

    /// Whether the waveform carries data bits.
    pub fn carries_bits(&self) -> bool {
        !(self.scheme.is_analog() && self.message == MessageSource::Tone)
    }

    pub fn bit_count(&self) -> usize {
        if self.carries_bits() {
            self.symbols * self.bits_per_symbol()
        } else {
            0
        }
    }

    pub fn bit_rate(&self) -> f64 {
        self.symbol_rate * self.bits_per_symbol() as f64
    }

    /// FM frequency sensitivity in rad/s per message unit.
    pub fn k_f(&self) -> f64 {
        std::f64::consts::PI * self.fm_index * self.symbol_rate
    }

    pub fn fsk_spacing(&self) -> f64 {
        self.fsk_spacing_hz.unwrap_or(self.symbol_rate)
    }

    pub fn chirp_sweep(&self) -> f64 {
        self.chirp_sweep_hz.unwrap_or(self.symbol_rate)
    }

    /// Tone frequency for FSK symbol index `d` out of `order`.
    pub fn fsk_tone(&self, d: usize, order: usize) -> f64 {
        self.carrier_hz + (d as f64 - (order as f64 - 1.0) / 2.0) * self.fsk_spacing()
    }

    /// Rough one-sided extent of the modulated band around the carrier.
    pub fn occupied_half_band(&self) -> f64 {
        let rs = self.symbol_rate;
        let linear = match self.pulse {
            PulseShape::Rectangular => rs,
            PulseShape::RootRaisedCosine { rolloff, .. } => (1.0 + rolloff) * rs / 2.0,
        };
        let message_bw = match self.message {
            MessageSource::Data => rs,
            MessageSource::Tone => self.tone_hz,
        };
        match &self.scheme {
            Scheme::Ook | Scheme::Bpsk | Scheme::Qpsk | Scheme::Qam(_) => linear,
            Scheme::Am | Scheme::Pm => message_bw,
            Scheme::Fm => self.fm_index * rs / 2.0 + message_bw,
            Scheme::Bfsk => self.fsk_spacing() / 2.0 + rs,
            Scheme::Fsk => 1.5 * self.fsk_spacing() + rs,
            Scheme::Msk | Scheme::Gmsk => 0.75 * rs,
            Scheme::Chirp => self.chirp_sweep() + rs,
            Scheme::Formula(_) => linear,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: &str| Err(SynthError::InvalidConfig(msg.to_string()));
        if !(self.symbol_rate > 0.0 && self.symbol_rate.is_finite()) {
            return bad("symbol_rate must be positive");
        }
        if self.samples_per_symbol < 4 {
            return bad("samples_per_symbol must be at least 4");
        }
        if self.symbols == 0 {
            return bad("symbols must be at least 1");
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return bad("carrier_hz must be positive");
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return bad("amplitude must be positive");
        }
        if let Scheme::Qam(m) = self.scheme {
            if !QAM_ORDERS.contains(&m) {
                return Err(SynthError::UnsupportedOrder(m));
            }
        }
        if self.scheme == Scheme::Gmsk && !(self.gmsk_bt > 0.0) {
            return bad("gmsk_bt must be positive");
        }
        if let PulseShape::RootRaisedCosine { rolloff, span_symbols } = self.pulse {
            if !(0.0..=1.0).contains(&rolloff) || span_symbols == 0 {
                return bad("root-raised-cosine needs rolloff in [0, 1] and a nonzero span");
            }
        }
        if matches!(self.scheme, Scheme::Formula(_)) {
            match self.base {
                Scheme::Bpsk | Scheme::Qpsk | Scheme::Ook | Scheme::Qam(_) => {}
                ref other => return Err(SynthError::BadBase(other.clone())),
            }
        }
        self.check_band(self.occupied_half_band())
    }

    /// Fails when a band of `half` Hz either side of the carrier leaves (0, fs/2).
    pub fn check_band(&self, half: f64) -> Result<(), SynthError> {
        let nyquist = self.sample_rate() / 2.0;
        if self.carrier_hz + half >= nyquist || self.carrier_hz - half <= 0.0 {
            return Err(SynthError::Nyquist {
                carrier_hz: self.carrier_hz,
                half_band_hz: half,
                nyquist_hz: nyquist,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        for (s, want) in [
            ("bpsk", Scheme::Bpsk),
            ("QAM-16", Scheme::Qam(16)),
            ("qam128", Scheme::Qam(128)),
            ("256-QAM", Scheme::Qam(256)),
            ("Chirp", Scheme::Chirp),
            ("formula:M1", Scheme::Formula("M1".into())),
        ] {
            assert_eq!(s.parse::<Scheme>().unwrap(), want, "{s}");
        }
        assert!("qam32".parse::<Scheme>().is_err());
        assert!("ofdm".parse::<Scheme>().is_err());
        for s in Scheme::references() {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
    }

    #[test]
    fn default_is_consistent() {
        let c = SchemeConfig::default();
        assert_eq!(c.sample_rate(), 48_000.0);
        for s in Scheme::references() {
            SchemeConfig::new(s.clone()).validate().unwrap_or_else(|e| panic!("{s}: {e}"));
        }
    }

    #[test]
    fn nyquist_violation() {
        let c = SchemeConfig {
            carrier_hz: 23_500.0,
            ..SchemeConfig::default()
        };
        assert!(matches!(c.validate(), Err(SynthError::Nyquist { .. })));
    }

    #[test]
    fn json_roundtrip() {
        let c = SchemeConfig {
            scheme: Scheme::Qam(64),
            pulse: PulseShape::rrc(),
            ..SchemeConfig::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"QAM-64\""));
        let back: SchemeConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let partial: SchemeConfig = serde_json::from_str(r#"{"scheme":"gmsk","symbols":10}"#).unwrap();
        assert_eq!(partial.scheme, Scheme::Gmsk);
        assert_eq!(partial.symbols, 10);
        assert!(serde_json::from_str::<SchemeConfig>(r#"{"bogus":1}"#).is_err());
    }
}
