use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use modwave_core::channel::ChannelConfig;
use modwave_core::costmodel::CostInputs;
use modwave_core::dsl::{bundled_tables, read_corpus, CorpusEntry};
use modwave_core::metrics::MetricsParams;
use modwave_core::rng::derive_seed;
use modwave_core::synth::SchemeConfig;
use modwave_genlab::{ExternalConfig, Grammar, GrammarConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

/// Index passed to `derive_seed` for the channel stream.
const CHANNEL_SEED_INDEX: u64 = 1;

/// One experiment, as read from the `--config` JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed for data, channel and grammar streams.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(default)]
    pub schemes: Vec<String>,
    /// Fields applied to every scheme.
    #[serde(default)]
    pub scheme_defaults: Map<String, Value>,
    /// Per-scheme fields, keyed by scheme name as written in `schemes`.
    #[serde(default)]
    pub overrides: BTreeMap<String, Map<String, Value>>,
    /// Channel fields; `preset` picks a starting point.
    #[serde(default)]
    pub channel: Map<String, Value>,
    #[serde(default)]
    pub metrics: MetricsParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    pub n: usize,
    /// Grammar sampler fields; the seed defaults to the master seed.
    pub grammar: Map<String, Value>,
    /// Grammar rules file replacing the bundled grammar.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grammar_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external: Option<ExternalConfig>,
    /// Corpus file whose formulas are used instead of sampling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<PathBuf>,
    pub evaluate: bool,
    /// Valid formulas are appended here; defaults to `generated.csv` in
    /// the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_corpus: Option<PathBuf>,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        Self {
            n: 20,
            grammar: Map::new(),
            grammar_file: None,
            external: None,
            fixture: None,
            evaluate: false,
            output_corpus: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    /// Cost model inputs; `n_ops` may be omitted when `formula` is set.
    pub inputs: Map<String, Value>,
    /// Derive `n_ops` from this formula's operation count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    /// Samples per run; defaults to the scheme defaults' sample count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

fn merge(into: &mut Map<String, Value>, from: &Map<String, Value>) {
    for (k, v) in from {
        into.insert(k.clone(), v.clone());
    }
}

fn from_map<T: serde::de::DeserializeOwned>(map: Map<String, Value>, what: &str) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

/// A loaded config with paths resolved against the config file.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let exp = Self { config, base_dir };
        exp.check_files()?;
        Ok(exp)
    }

    pub fn from_config(config: ExperimentConfig, base_dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let exp = Self {
            config,
            base_dir: base_dir.into(),
        };
        exp.check_files()?;
        Ok(exp)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn check_files(&self) -> Result<(), CliError> {
        let mut files: Vec<&PathBuf> = self.config.corpus.iter().collect();
        if let Some(g) = &self.config.generator {
            files.extend(g.grammar_file.iter());
            files.extend(g.fixture.iter());
        }
        for f in files {
            let p = self.resolve(f);
            if !p.is_file() {
                return Err(CliError::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.config
            .output_dir
            .as_ref()
            .map_or_else(|| PathBuf::from("out"), |p| self.resolve(p))
    }

    /// The configured corpus, or the bundled tables.
    pub fn corpus(&self) -> Result<Vec<CorpusEntry>, CliError> {
        match &self.config.corpus {
            Some(p) => read_corpus(self.resolve(p)).map_err(|e| CliError::Config(e.to_string())),
            None => Ok(bundled_tables()),
        }
    }

    /// Settings for `scheme`: master seed, then defaults, then overrides.
    pub fn scheme_config(&self, scheme: &str) -> Result<SchemeConfig, CliError> {
        let mut map = Map::new();
        map.insert("seed".into(), self.config.seed.into());
        merge(&mut map, &self.config.scheme_defaults);
        if let Some(o) = self.config.overrides.get(scheme) {
            merge(&mut map, o);
        }
        map.insert("scheme".into(), scheme.into());
        let cfg: SchemeConfig = from_map(map, &format!("scheme {scheme}"))?;
        cfg.validate()
            .map_err(|e| CliError::Config(format!("scheme {scheme}: {e}")))?;
        Ok(cfg)
    }

    /// Scheme defaults without a specific scheme, used as the template
    /// for generated formulas.
    pub fn base_scheme(&self) -> Result<SchemeConfig, CliError> {
        let mut map = Map::new();
        map.insert("seed".into(), self.config.seed.into());
        merge(&mut map, &self.config.scheme_defaults);
        from_map(map, "scheme_defaults")
    }

    pub fn channel(&self) -> Result<ChannelConfig, CliError> {
        let mut user = self.config.channel.clone();
        let preset = match user.remove("preset") {
            Some(Value::String(name)) => Some(name),
            Some(other) => return Err(CliError::Config(format!("channel preset must be a string, got {other}"))),
            None => None,
        };
        let seed = derive_seed(self.config.seed, CHANNEL_SEED_INDEX);
        let start = match preset.as_deref() {
            Some(name) => ChannelConfig::preset(name, seed)
                .ok_or_else(|| CliError::Config(format!("unknown channel preset '{name}'")))?,
            None if user.is_empty() => ChannelConfig::comparison(seed),
            None => ChannelConfig {
                seed,
                ..ChannelConfig::noiseless()
            },
        };
        let Value::Object(mut map) = serde_json::to_value(start).expect("channel serializes") else {
            unreachable!("channel config is an object")
        };
        merge(&mut map, &user);
        from_map(map, "channel")
    }

    pub fn grammar(&self) -> Result<GrammarConfig, CliError> {
        let section = self.config.generator.clone().unwrap_or_default();
        let mut map = Map::new();
        map.insert("seed".into(), self.config.seed.into());
        merge(&mut map, &section.grammar);
        let mut cfg: GrammarConfig = from_map(map, "generator.grammar")?;
        if let Some(f) = &section.grammar_file {
            let p = self.resolve(f);
            let text = fs::read_to_string(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            cfg.grammar = Grammar::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        }
        cfg.compile().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn cost_inputs(&self, n_ops: Option<u64>) -> Result<CostInputs<f64>, CliError> {
        let section = self
            .config
            .cost
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no `cost` section".into()))?;
        let mut map = section.inputs.clone();
        if let Some(n) = n_ops {
            map.insert("n_ops".into(), (n as f64).into());
        }
        from_map(map, "cost.inputs")
    }
}
