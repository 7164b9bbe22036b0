use modwave_core::channel::ChannelConfig;
use modwave_core::dsl::CorpusEntry;
use modwave_core::metrics::{compare, ComparisonTable, MetricsParams};
use modwave_core::synth::{Scheme, SchemeConfig};
use serde::{Deserialize, Serialize};

use crate::batch::{generate_from, GenerationBatchReport};
use crate::source::FormulaSource;

/// Validation statistics plus metrics for every formula that passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub batch: GenerationBatchReport,
    pub table: ComparisonTable,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pipeline report serializes")
    }
}

/// Generate `n` formulas, validate them and evaluate the evaluable ones
/// with `base` as the template configuration.
pub fn pipeline_run(
    source: &dyn FormulaSource,
    n: usize,
    channel: &ChannelConfig,
    base: &SchemeConfig,
    params: &MetricsParams,
) -> PipelineReport {
    let batch = generate_from(source, n);
    let passing: Vec<CorpusEntry> = batch
        .formulas
        .iter()
        .filter(|f| f.is_evaluable())
        .map(|f| CorpusEntry {
            id: f.id.clone(),
            name: format!("generated {}", f.id),
            formula: f.text.clone().unwrap_or_default(),
        })
        .collect();
    let configs: Vec<SchemeConfig> = passing
        .iter()
        .map(|e| SchemeConfig {
            scheme: Scheme::Formula(e.id.clone()),
            ..base.clone()
        })
        .collect();
    let table = compare(&configs, channel, params, &passing);
    PipelineReport { batch, table }
}
