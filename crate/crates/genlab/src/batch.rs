use std::collections::BTreeMap;

use modwave_core::dsl::{validate_text, FormulaClass, ParseOptions, SymbolTable, ValidationPolicy, ValidationReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grammar::{GrammarConfig, GrammarError};
use crate::source::{FormulaSource, GrammarSource, SourceError};

/// One generated candidate and its validation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedFormula {
    pub index: usize,
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub class: Option<FormulaClass>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<ValidationReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source_error: Option<SourceError>,
}

impl GeneratedFormula {
    /// Parsed with no blocking semantic flag.
    pub fn is_evaluable(&self) -> bool {
        self.report.as_ref().is_some_and(ValidationReport::is_evaluable)
    }
}

/// Aggregate statistics for a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationBatchReport {
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub requested: usize,
    /// Candidates actually produced; excludes source failures.
    pub total: usize,
    pub syntactically_valid: usize,
    pub valid: usize,
    pub source_errors: usize,
    pub classes: BTreeMap<FormulaClass, usize>,
    pub semantic_flags: BTreeMap<String, usize>,
    pub formulas: Vec<GeneratedFormula>,
}

impl GenerationBatchReport {
    pub fn valid_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.valid as f64 / self.total as f64
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("batch report serializes")
    }

    /// Whether every count agrees with the per-formula entries.
    pub fn is_consistent(&self) -> bool {
        let produced: Vec<&GeneratedFormula> = self.formulas.iter().filter(|f| f.text.is_some()).collect();
        let class_sum: usize = self.classes.values().sum();
        let syn = produced
            .iter()
            .filter(|f| f.report.as_ref().is_some_and(|r| r.syntactic_ok))
            .count();
        let valid = produced.iter().filter(|f| f.class == Some(FormulaClass::Valid)).count();
        self.valid <= self.total
            && self.syntactically_valid <= self.total
            && produced.len() == self.total
            && self.total + self.source_errors == self.requested
            && class_sum == self.total
            && syn == self.syntactically_valid
            && valid == self.valid
    }
}

fn flag_label(flag: &modwave_core::dsl::SemanticFlag) -> String {
    serde_json::to_value(flag)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(String::from))
        .unwrap_or_else(|| "unknown".into())
}

/// Validates one candidate string.
pub fn classify(text: &str) -> ValidationReport {
    validate_text(text, &SymbolTable::standard(), &ValidationPolicy::default(), &ParseOptions::default()).1
}

/// Pull `n` candidates from `source`, validate each and aggregate.
/// Source failures are recorded per index and never abort the batch.
pub fn generate_from(source: &dyn FormulaSource, n: usize) -> GenerationBatchReport {
    let fetch_one = |index: usize| {
        let id = source.label(index);
        match source.fetch(index) {
            Ok(text) => {
                let report = classify(&text);
                GeneratedFormula {
                    index,
                    id,
                    class: Some(report.classify()),
                    text: Some(text),
                    report: Some(report),
                    source_error: None,
                }
            }
            Err(e) => GeneratedFormula {
                index,
                id,
                text: None,
                class: None,
                report: None,
                source_error: Some(e),
            },
        }
    };
    let formulas: Vec<GeneratedFormula> = match rayon::ThreadPoolBuilder::new()
        .num_threads(source.concurrency().max(1))
        .build()
    {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(fetch_one).collect()),
        Err(_) => (0..n).map(fetch_one).collect(),
    };

    let mut classes: BTreeMap<FormulaClass, usize> = FormulaClass::ALL.iter().map(|c| (*c, 0)).collect();
    let mut semantic_flags = BTreeMap::new();
    let (mut total, mut syntactically_valid, mut source_errors) = (0, 0, 0);
    for f in &formulas {
        match (&f.report, &f.class) {
            (Some(report), Some(class)) => {
                total += 1;
                *classes.entry(*class).or_default() += 1;
                if report.syntactic_ok {
                    syntactically_valid += 1;
                }
                for flag in &report.semantic_flags {
                    *semantic_flags.entry(flag_label(flag)).or_default() += 1;
                }
            }
            _ => source_errors += 1,
        }
    }
    GenerationBatchReport {
        source: source.describe(),
        temperature: source.temperature(),
        seed: source.seed(),
        requested: n,
        total,
        syntactically_valid,
        valid: classes[&FormulaClass::Valid],
        source_errors,
        classes,
        semantic_flags,
        formulas,
    }
}

/// Grammar batch of `n` samples, one derived stream per index.
pub fn generate_batch(n: usize, config: &GrammarConfig) -> Result<GenerationBatchReport, GrammarError> {
    Ok(generate_from(&GrammarSource::new(config)?, n))
}
