use std::fs::{self, File, OpenOptions};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use modwave_core::costmodel::{cost, waveform_ops, CostReport};
use modwave_core::dsl::{
    op_count, read_corpus, validate_text, write_corpus, CorpusEntry, FormulaClass, ParseOptions, SymbolTable,
    ValidationPolicy, ValidationReport,
};
use modwave_core::io::{write_constellation_csv, write_psd_csv, write_spectrogram_csv};
use modwave_core::metrics::{compare, evaluate_scheme, ComparisonTable, MetricsError};
use modwave_core::synth::{resolve_formula, SynthError};
use modwave_genlab::{
    generate_from, pipeline_run, ExternalConfig, ExternalSource, FixtureSource, FormulaSource, GenerationBatchReport,
    GrammarSource,
};
use serde::Serialize;

use crate::config::Experiment;
use crate::error::CliError;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(path, &text)
}

fn writer(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))
}

/// File-system friendly name for a scheme.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct ValidatedEntry {
    pub id: String,
    pub name: String,
    pub class: FormulaClass,
    pub report: ValidationReport,
}

#[derive(Debug, Serialize)]
pub struct ValidationSummary {
    pub total: usize,
    pub syntactically_valid: usize,
    pub evaluable: usize,
    pub semantic_flags: usize,
    pub entries: Vec<ValidatedEntry>,
}

pub fn validate_entries(entries: &[CorpusEntry]) -> ValidationSummary {
    let table = SymbolTable::standard();
    let entries: Vec<ValidatedEntry> = entries
        .iter()
        .map(|e| {
            let (_, report) = validate_text(&e.formula, &table, &ValidationPolicy::default(), &ParseOptions::default());
            ValidatedEntry {
                id: e.id.clone(),
                name: e.name.clone(),
                class: report.classify(),
                report,
            }
        })
        .collect();
    ValidationSummary {
        total: entries.len(),
        syntactically_valid: entries.iter().filter(|e| e.report.syntactic_ok).count(),
        evaluable: entries.iter().filter(|e| e.report.is_evaluable()).count(),
        semantic_flags: entries.iter().map(|e| e.report.semantic_flags.len()).sum(),
        entries,
    }
}

/// Validate a corpus file. Fails with exit status 1 unless every row parses.
pub fn cmd_validate(corpus: &[CorpusEntry], out: &Path) -> Result<String, CliError> {
    let summary = validate_entries(corpus);
    create_dir(out)?;
    write_json(&out.join("validation.json"), &summary)?;
    let mut text = String::new();
    for e in &summary.entries {
        let detail = if e.report.error_messages.is_empty() {
            String::new()
        } else {
            format!(" ({})", e.report.error_messages.join("; "))
        };
        text.push_str(&format!("{:<8} {:<24} {}{}\n", e.id, e.class.label(), e.report.formula, detail));
    }
    text.push_str(&format!(
        "{}/{} syntactically valid, {} evaluable, {} semantic flag(s)\n",
        summary.syntactically_valid, summary.total, summary.evaluable, summary.semantic_flags
    ));
    if summary.syntactically_valid == summary.total {
        Ok(text)
    } else {
        let bad: Vec<&str> = summary
            .entries
            .iter()
            .filter(|e| !e.report.syntactic_ok)
            .map(|e| e.id.as_str())
            .collect();
        print!("{text}");
        Err(CliError::Validation(format!("syntax errors in: {}", bad.join(", "))))
    }
}

pub fn load_corpus_file(path: &Path) -> Result<Vec<CorpusEntry>, CliError> {
    read_corpus(path).map_err(|e| CliError::Config(e.to_string()))
}

fn metrics_error(e: MetricsError) -> CliError {
    match e {
        MetricsError::Synth(SynthError::FormulaRejected { .. } | SynthError::UnknownFormula(_)) => {
            CliError::Validation(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

/// Evaluate one scheme and write its report and spectra.
pub fn cmd_eval(exp: &Experiment, scheme: Option<&str>, out: &Path) -> Result<String, CliError> {
    let name = scheme
        .map(str::to_string)
        .or_else(|| exp.config.schemes.first().cloned())
        .ok_or_else(|| CliError::Config("no scheme given; pass --scheme or list one in `schemes`".into()))?;
    let cfg = exp.scheme_config(&name)?;
    let channel = exp.channel()?;
    let corpus = exp.corpus()?;
    let ev = evaluate_scheme(&cfg, &channel, &exp.config.metrics, &corpus, true).map_err(metrics_error)?;

    let dir = out.join(slug(&name));
    create_dir(&dir)?;
    let mut report = ev.report.clone();
    let psd_path = dir.join("psd.csv");
    write_psd_csv(writer(&psd_path)?, &ev.psd).map_err(|e| CliError::Config(e.to_string()))?;
    report.artifacts.insert("psd".into(), "psd.csv".into());
    if let Some(sg) = &ev.spectrogram {
        write_spectrogram_csv(writer(&dir.join("spectrogram.csv"))?, sg).map_err(|e| CliError::Config(e.to_string()))?;
        report.artifacts.insert("spectrogram".into(), "spectrogram.csv".into());
    }
    write_constellation_csv(writer(&dir.join("constellation.csv"))?, &ev.constellation)
        .map_err(|e| CliError::Config(e.to_string()))?;
    report.artifacts.insert("constellation".into(), "constellation.csv".into());
    write_json(&dir.join("report.json"), &report)?;
    Ok(serde_json::to_string_pretty(&report).expect("report serializes") + "\n")
}

/// Known-vs-generated table over every configured scheme.
pub fn cmd_compare(exp: &Experiment, out: &Path) -> Result<(String, ComparisonTable), CliError> {
    if exp.config.schemes.len() < 2 {
        return Err(CliError::Config(format!(
            "compare needs at least two schemes, got {}",
            exp.config.schemes.len()
        )));
    }
    let configs = exp
        .config
        .schemes
        .iter()
        .map(|s| exp.scheme_config(s))
        .collect::<Result<Vec<_>, _>>()?;
    let table = compare(&configs, &exp.channel()?, &exp.config.metrics, &exp.corpus()?);
    create_dir(out)?;
    let csv = table.to_csv();
    write_text(&out.join("comparison.csv"), &csv)?;
    write_text(&out.join("comparison.json"), &(table.to_json() + "\n"))?;
    Ok((csv, table))
}

/// Where generated formulas come from, in priority order.
pub fn generation_source(exp: &Experiment, endpoint: Option<&str>) -> Result<Box<dyn FormulaSource>, CliError> {
    let section = exp.config.generator.clone().unwrap_or_default();
    let endpoint = endpoint.filter(|e| !e.is_empty()).map(str::to_string).or_else(|| {
        section
            .external
            .as_ref()
            .map(|x| x.endpoint.clone())
            .filter(|e| !e.is_empty())
    });
    if let Some(endpoint) = endpoint {
        let cfg = ExternalConfig {
            endpoint,
            ..section.external.clone().unwrap_or_default()
        };
        return Ok(Box::new(ExternalSource::from_corpus(cfg, &exp.corpus()?)));
    }
    if let Some(f) = &section.fixture {
        return Ok(Box::new(FixtureSource::new(load_corpus_file(&exp.resolve(f))?)));
    }
    let grammar = exp.grammar()?;
    Ok(Box::new(GrammarSource::new(&grammar).map_err(|e| CliError::Config(e.to_string()))?))
}

fn append_corpus(path: &Path, entries: &[CorpusEntry]) -> Result<(), CliError> {
    if !path.exists() {
        return write_corpus(writer(path)?, entries).map_err(|e| CliError::Config(e.to_string()));
    }
    let file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(format!("cannot append to {}", path.display()), e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    for e in entries {
        w.serialize(e).map_err(|e| CliError::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(format!("cannot append to {}", path.display()), e))
}

/// Generate, validate and optionally evaluate candidate formulas.
pub fn cmd_generate(
    exp: &Experiment,
    n: Option<usize>,
    evaluate: bool,
    endpoint: Option<&str>,
    out: &Path,
) -> Result<String, CliError> {
    let section = exp.config.generator.clone().unwrap_or_default();
    let source = generation_source(exp, endpoint)?;
    let n = n.unwrap_or(section.n);
    let evaluate = evaluate || section.evaluate;
    create_dir(out)?;

    let (batch, table): (GenerationBatchReport, Option<ComparisonTable>) = if evaluate {
        let run = pipeline_run(source.as_ref(), n, &exp.channel()?, &exp.base_scheme()?, &exp.config.metrics);
        (run.batch, Some(run.table))
    } else {
        (generate_from(source.as_ref(), n), None)
    };
    write_json(&out.join("generation.json"), &batch)?;
    if let Some(t) = &table {
        write_text(&out.join("generation_metrics.csv"), &t.to_csv())?;
        write_text(&out.join("generation_metrics.json"), &(t.to_json() + "\n"))?;
    }
    let valid: Vec<CorpusEntry> = batch
        .formulas
        .iter()
        .filter(|f| f.class == Some(FormulaClass::Valid))
        .map(|f| CorpusEntry {
            id: f.id.clone(),
            name: format!("generated {}", f.id),
            formula: f.text.clone().unwrap_or_default(),
        })
        .collect();
    let corpus_path = section
        .output_corpus
        .as_ref()
        .map_or_else(|| out.join("generated.csv"), |p| exp.resolve(p));
    append_corpus(&corpus_path, &valid)?;

    let mut text = format!(
        "{}: {} requested, {} generated, {} syntactically valid, {} valid, {} source error(s)\n",
        batch.source, batch.requested, batch.total, batch.syntactically_valid, batch.valid, batch.source_errors
    );
    for (class, count) in &batch.classes {
        text.push_str(&format!("  {:<24} {count}\n", class.label()));
    }
    if let Some(t) = &table {
        text.push_str(&t.to_csv());
    }
    if batch.source_errors > 0 {
        print!("{text}");
        let first = batch
            .formulas
            .iter()
            .find_map(|f| f.source_error.as_ref())
            .map(ToString::to_string)
            .unwrap_or_default();
        return Err(CliError::External(format!(
            "{} of {} requests failed; first error: {first}",
            batch.source_errors, batch.requested
        )));
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
pub struct CostOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub cost: CostReport<f64>,
}

/// Latency and power breakdown.
pub fn cmd_cost(exp: &Experiment, out: &Path) -> Result<String, CliError> {
    let section = exp
        .config
        .cost
        .clone()
        .ok_or_else(|| CliError::Config("config has no `cost` section".into()))?;
    let (ops, samples, n_ops) = match &section.formula {
        Some(id) => {
            let resolved = resolve_formula(id, &exp.corpus()?).map_err(|e| CliError::Validation(e.to_string()))?;
            let samples = match section.samples {
                Some(s) => s,
                None => exp.base_scheme()?.sample_count(),
            };
            (
                Some(op_count(&resolved.expr)),
                Some(samples),
                Some(waveform_ops(&resolved.expr, samples)),
            )
        }
        None => (None, None, None),
    };
    let inputs = exp.cost_inputs(n_ops)?;
    let report = cost(&inputs).map_err(|e| CliError::Config(e.to_string()))?;
    let output = CostOutput {
        formula: section.formula.clone(),
        op_count: ops,
        samples,
        cost: report,
    };
    create_dir(out)?;
    write_json(&out.join("cost.json"), &output)?;
    Ok(serde_json::to_string_pretty(&output).expect("cost serializes") + "\n")
}

pub fn default_out(out: Option<PathBuf>, exp: Option<&Experiment>) -> PathBuf {
    out.unwrap_or_else(|| exp.map_or_else(|| PathBuf::from("out"), Experiment::output_dir))
}
