//! Candidate formula generation: a weighted grammar sampler with a
//! temperature knob, an HTTP client for external generators, and the
//! generate, validate and evaluate pipeline.

pub mod batch;
pub mod grammar;
pub mod pipeline;
pub mod source;

pub use batch::{classify, generate_batch, generate_from, GeneratedFormula, GenerationBatchReport};
pub use grammar::{sample_formula, Alternative, Grammar, GrammarConfig, GrammarError, Injection, Sampler};
pub use pipeline::{pipeline_run, PipelineReport};
pub use source::{
    ExternalConfig, ExternalSource, FixtureSource, FormulaSource, GrammarSource, SourceError, ENDPOINT_ENV,
};
