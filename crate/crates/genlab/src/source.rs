use std::time::Duration;

use modwave_core::dsl::CorpusEntry;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{GrammarConfig, GrammarError, Sampler};

/// Environment variable naming the external generator endpoint.
pub const ENDPOINT_ENV: &str = "MODWAVE_GEN_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceError {
    #[error("request to {endpoint} timed out")]
    Timeout { endpoint: String },
    #[error("{endpoint} answered with status {status}")]
    Status { endpoint: String, status: u16 },
    #[error("malformed response from {endpoint}: {message}")]
    Malformed { endpoint: String, message: String },
    #[error("cannot reach {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("fixture has no formula at index {index}")]
    Exhausted { index: usize },
}

/// Anything that yields candidate formula text.
pub trait FormulaSource: Sync {
    /// Short description recorded in reports.
    fn describe(&self) -> String;

    /// Formula number `index` of the batch.
    fn fetch(&self, index: usize) -> Result<String, SourceError>;

    /// Identifier used when the formula is evaluated.
    fn label(&self, index: usize) -> String {
        format!("G{}", index + 1)
    }

    /// How many `fetch` calls may run at once.
    fn concurrency(&self) -> usize {
        rayon::current_num_threads()
    }

    fn temperature(&self) -> Option<f64> {
        None
    }

    fn seed(&self) -> Option<u64> {
        None
    }
}

/// The built-in weighted grammar.
#[derive(Debug, Clone)]
pub struct GrammarSource {
    sampler: Sampler,
}

impl GrammarSource {
    pub fn new(config: &GrammarConfig) -> Result<Self, GrammarError> {
        Ok(Self {
            sampler: config.compile()?,
        })
    }
}

impl FormulaSource for GrammarSource {
    fn describe(&self) -> String {
        "grammar".into()
    }

    fn fetch(&self, index: usize) -> Result<String, SourceError> {
        Ok(self.sampler.sample_indexed(index as u64))
    }

    fn temperature(&self) -> Option<f64> {
        Some(self.sampler.temperature())
    }

    fn seed(&self) -> Option<u64> {
        Some(self.sampler.seed())
    }
}

/// Formulas read from a corpus file, in file order.
#[derive(Debug, Clone)]
pub struct FixtureSource {
    pub entries: Vec<CorpusEntry>,
}

impl FixtureSource {
    pub fn new(entries: Vec<CorpusEntry>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FormulaSource for FixtureSource {
    fn describe(&self) -> String {
        "fixture".into()
    }

    fn fetch(&self, index: usize) -> Result<String, SourceError> {
        self.entries
            .get(index)
            .map(|e| e.formula.clone())
            .ok_or(SourceError::Exhausted { index })
    }

    fn label(&self, index: usize) -> String {
        self.entries
            .get(index)
            .map_or_else(|| format!("G{}", index + 1), |e| e.id.clone())
    }
}

/// Settings for the HTTP text generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExternalConfig {
    pub endpoint: String,
    pub temperature: f64,
    pub max_tokens: usize,
    pub timeout_ms: u64,
    pub retries: u32,
    pub concurrency: usize,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            temperature: 0.8,
            max_tokens: 128,
            timeout_ms: 10_000,
            retries: 1,
            concurrency: 4,
        }
    }
}

#[derive(Debug, Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    temperature: f64,
    max_tokens: usize,
}

#[derive(Debug, Deserialize)]
struct GenerateResponse {
    text: String,
}

/// Client for a text-generation endpoint. Prompts cycle through the
/// supplied seed formulas.
#[derive(Debug, Clone)]
pub struct ExternalSource {
    config: ExternalConfig,
    prompts: Vec<String>,
    agent: ureq::Agent,
}

impl ExternalSource {
    pub fn new(config: ExternalConfig, prompts: Vec<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, prompts, agent }
    }

    /// Prompts are the formulas of `corpus`.
    pub fn from_corpus(config: ExternalConfig, corpus: &[CorpusEntry]) -> Self {
        Self::new(config, corpus.iter().map(|e| e.formula.clone()).collect())
    }

    pub fn config(&self) -> &ExternalConfig {
        &self.config
    }

    fn prompt(&self, index: usize) -> &str {
        if self.prompts.is_empty() {
            ""
        } else {
            &self.prompts[index % self.prompts.len()]
        }
    }

    fn request_once(&self, prompt: &str) -> Result<String, SourceError> {
        let endpoint = &self.config.endpoint;
        let body = GenerateRequest {
            prompt,
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let mut resp = self.agent.post(endpoint).send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(_) => SourceError::Timeout {
                endpoint: endpoint.clone(),
            },
            other => SourceError::Transport {
                endpoint: endpoint.clone(),
                message: other.to_string(),
            },
        })?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(SourceError::Status {
                endpoint: endpoint.clone(),
                status,
            });
        }
        let parsed: GenerateResponse = resp.body_mut().read_json().map_err(|e| match e {
            ureq::Error::Timeout(_) => SourceError::Timeout {
                endpoint: endpoint.clone(),
            },
            other => SourceError::Malformed {
                endpoint: endpoint.clone(),
                message: other.to_string(),
            },
        })?;
        Ok(parsed.text)
    }
}

impl FormulaSource for ExternalSource {
    fn describe(&self) -> String {
        format!("external:{}", self.config.endpoint)
    }

    fn fetch(&self, index: usize) -> Result<String, SourceError> {
        let prompt = self.prompt(index);
        let mut attempt = 0;
        loop {
            match self.request_once(prompt) {
                Ok(text) => return Ok(text),
                // a malformed body will not improve on retry
                Err(e @ SourceError::Malformed { .. }) => return Err(e),
                Err(e) if attempt >= self.config.retries => return Err(e),
                Err(_) => attempt += 1,
            }
        }
    }

    fn concurrency(&self) -> usize {
        self.config.concurrency.max(1)
    }

    fn temperature(&self) -> Option<f64> {
        Some(self.config.temperature)
    }
}
