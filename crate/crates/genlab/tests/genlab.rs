use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use modwave_core::channel::ChannelConfig;
use modwave_core::dsl::{bundled_entry, bundled_generated, FormulaClass};
use modwave_core::metrics::MetricsParams;
use modwave_core::synth::SchemeConfig;
use modwave_genlab::{
    generate_batch, generate_from, pipeline_run, ExternalConfig, ExternalSource, FixtureSource, FormulaSource,
    GrammarConfig, GrammarSource, SourceError,
};
use proptest::prelude::*;

fn grammar(t: f64, seed: u64) -> GrammarConfig {
    GrammarConfig::default().with_temperature(t).with_seed(seed)
}

#[test]
fn near_zero_temperature_gives_the_argmax_derivation() {
    let want = grammar(0.8, 0).compile().unwrap().argmax();
    for seed in [0, 1, 99, u64::MAX] {
        assert_eq!(modwave_genlab::sample_formula(&grammar(1e-6, seed)).unwrap(), want);
    }
}

#[test]
fn same_seed_same_text() {
    let a = modwave_genlab::sample_formula(&grammar(0.8, 7)).unwrap();
    let b = modwave_genlab::sample_formula(&grammar(0.8, 7)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_sample_gets_exactly_one_class() {
    let r = generate_batch(1000, &grammar(0.8, 2024)).unwrap();
    assert!(r.is_consistent());
    assert_eq!(r.total, 1000);
    for f in &r.formulas {
        let report = f.report.as_ref().unwrap();
        let class = f.class.unwrap();
        assert_eq!(class, report.classify());
        assert_eq!(class == FormulaClass::Valid, report.is_evaluable() && report.syntactic_ok);
    }
    let failing: Vec<_> = r.classes.iter().filter(|(c, n)| **c != FormulaClass::Valid && **n > 0).collect();
    assert!(failing.len() >= 3, "{:?}", r.classes);
    assert!(r.valid > 500, "{:?}", r.classes);
}

#[test]
fn batch_sizes() {
    let r = generate_batch(20, &grammar(0.8, 2024)).unwrap();
    assert_eq!(r.formulas.len(), 20);
    assert_eq!(r.classes.values().sum::<usize>(), 20);
    assert_eq!(r.temperature, Some(0.8));
    assert_eq!(r.seed, Some(2024));
    let one = generate_batch(1, &grammar(0.8, 1)).unwrap();
    assert_eq!((one.requested, one.total), (1, 1));
    assert!(one.is_consistent());
}

#[test]
fn cooler_sampling_is_more_valid() {
    let cold = generate_batch(200, &grammar(0.5, 11)).unwrap();
    let hot = generate_batch(200, &grammar(1.3, 11)).unwrap();
    assert!(cold.valid_fraction() >= hot.valid_fraction(), "{} vs {}", cold.valid_fraction(), hot.valid_fraction());
}

#[test]
fn mean_validity_falls_with_temperature() {
    let means: Vec<f64> = [0.5, 0.8, 1.1, 1.4]
        .iter()
        .map(|&t| {
            (0..10u64)
                .map(|seed| generate_batch(200, &grammar(t, seed)).unwrap().valid_fraction())
                .sum::<f64>()
                / 10.0
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
}

proptest! {
    #[test]
    fn samples_respect_the_token_budget(seed in any::<u64>(), t in 0.05..5.0f64, max_tokens in 25usize..128) {
        let cfg = GrammarConfig { max_tokens, ..grammar(t, seed) };
        let s = cfg.compile().unwrap();
        let text = s.sample_indexed(3);
        prop_assert!(text.split_whitespace().count() <= max_tokens);
        prop_assert_eq!(text, s.sample_indexed(3));
    }

    #[test]
    fn tempered_probabilities_are_distributions(t in 0.01..10.0f64) {
        let s = grammar(t, 0).compile().unwrap();
        let p = s.probabilities("formula").unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let hotter = grammar(t * 1.5, 0).compile().unwrap().probabilities("formula").unwrap();
        // the lightest alternative gains mass as temperature rises
        let last = p.len() - 1;
        prop_assert!(hotter[last] >= p[last]);
    }
}

/// Minimal HTTP/1.1 server answering each request with `respond(body)`.
struct MockServer {
    url: String,
    hits: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> String {
    let mut reader = BufReader::new(stream);
    let mut len = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return String::new();
        }
        let lower = line.to_ascii_lowercase();
        if let Some(v) = lower.strip_prefix("content-length:") {
            len = v.trim().parse().unwrap_or(0);
        }
        if line == "\r\n" {
            break;
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();
    String::from_utf8(body).unwrap()
}

fn serve<F>(respond: F) -> MockServer
where
    F: Fn(usize, &str) -> Option<(u16, String)> + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/generate", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let body = read_request(&mut stream);
            let n = counter.fetch_add(1, Ordering::SeqCst);
            match respond(n, &body) {
                Some((status, text)) => {
                    let head = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                        text.len()
                    );
                    let _ = stream.write_all(head.as_bytes());
                    let _ = stream.write_all(text.as_bytes());
                }
                // hang without answering
                None => thread::sleep(Duration::from_secs(5)),
            }
        }
    });
    MockServer { url, hits }
}

fn external(url: &str) -> ExternalConfig {
    ExternalConfig {
        endpoint: url.to_string(),
        timeout_ms: 400,
        ..ExternalConfig::default()
    }
}

fn reply(text: &str) -> String {
    serde_json::json!({ "text": text }).to_string()
}

#[test]
fn echoed_corpus_formula_is_valid() {
    let server = serve(|_, body| {
        let req: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(req["max_tokens"], 128);
        assert!((req["temperature"].as_f64().unwrap() - 0.8).abs() < 1e-12);
        Some((200, reply(req["prompt"].as_str().unwrap())))
    });
    let qpsk = bundled_entry("QPSK").unwrap();
    let src = ExternalSource::from_corpus(external(&server.url), &[qpsk.clone()]);
    let r = generate_from(&src, 3);
    assert_eq!(r.valid, 3);
    assert_eq!(r.formulas[0].text.as_deref(), Some(qpsk.formula.as_str()));
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn truncated_reply_is_unbalanced() {
    let server = serve(|_, _| Some((200, reply("cos(2*pi*f_c*t"))));
    let src = ExternalSource::new(external(&server.url), vec!["A_c".into()]);
    let r = generate_from(&src, 1);
    assert_eq!(r.formulas[0].class, Some(FormulaClass::UnbalancedParenthesis));
}

#[test]
fn one_retry_after_failure() {
    let server = serve(|n, _| Some(if n == 0 { (503, "{}".into()) } else { (200, reply("A_c * cos(2*pi*f_c*t)")) }));
    let src = ExternalSource::new(ExternalConfig { concurrency: 1, ..external(&server.url) }, vec![]);
    assert_eq!(src.fetch(0).unwrap(), "A_c * cos(2*pi*f_c*t)");
    assert_eq!(server.hits.load(Ordering::SeqCst), 2);

    let always = serve(|_, _| Some((500, "{}".into())));
    let src = ExternalSource::new(external(&always.url), vec![]);
    assert!(matches!(src.fetch(0), Err(SourceError::Status { status: 500, .. })));
    assert_eq!(always.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn malformed_body_is_reported() {
    let server = serve(|_, _| Some((200, "{\"txt\": 1}".into())));
    let src = ExternalSource::new(external(&server.url), vec![]);
    assert!(matches!(src.fetch(0), Err(SourceError::Malformed { .. })));
}

#[test]
fn silent_server_times_out() {
    let server = serve(|_, _| None);
    let src = ExternalSource::new(ExternalConfig { retries: 0, ..external(&server.url) }, vec![]);
    let start = Instant::now();
    assert!(matches!(src.fetch(0), Err(SourceError::Timeout { .. })));
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn unreachable_endpoint_does_not_stop_the_batch() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dead = ExternalSource::new(external(&format!("http://127.0.0.1:{port}/generate")), vec![]);
    let start = Instant::now();
    let failed = generate_from(&dead, 4);
    assert!(start.elapsed() < Duration::from_secs(5));
    assert_eq!((failed.source_errors, failed.total), (4, 0));
    assert!(failed.is_consistent());
    assert!(failed.formulas.iter().all(|f| matches!(f.source_error, Some(SourceError::Transport { .. }))));

    // later sources still run and earlier results stay as they were
    let before = failed.to_json();
    let ok = generate_from(&GrammarSource::new(&grammar(0.8, 1)).unwrap(), 5);
    assert_eq!(ok.total, 5);
    assert_eq!(before, failed.to_json());
}

#[test]
fn fixture_pipeline_evaluates_table_three() {
    let src = FixtureSource::new(bundled_generated());
    let base = SchemeConfig {
        symbols: 400,
        seed: 5,
        ..SchemeConfig::default()
    };
    let run = pipeline_run(&src, src.len(), &ChannelConfig::awgn(10.0, 3), &base, &MetricsParams::default());
    assert_eq!(run.batch.valid, 3);
    let names: Vec<&str> = run.table.rows.iter().map(|r| r.modulation.as_str()).collect();
    assert_eq!(names, ["formula:M1", "formula:M2", "formula:M3"]);
    assert!(run.table.rows.iter().all(|r| r.error.is_none()));
    assert_eq!(run.table.rows[0].guard_count, 0);
    assert!(run.table.rows[2].guard_count > 0);
}

#[test]
fn empty_pipeline() {
    let src = FixtureSource::new(vec![]);
    let run = pipeline_run(&src, 0, &ChannelConfig::noiseless(), &SchemeConfig::default(), &MetricsParams::default());
    assert_eq!(run.batch.total, 0);
    assert!(run.table.rows.is_empty());
}

#[test]
fn grammar_pipeline_is_reproducible() {
    let base = SchemeConfig {
        symbols: 100,
        seed: 1,
        ..SchemeConfig::default()
    };
    let run = || {
        let src = GrammarSource::new(&grammar(0.8, 42)).unwrap();
        pipeline_run(&src, 50, &ChannelConfig::awgn(12.0, 8), &base, &MetricsParams::default()).to_json()
    };
    let a = run();
    assert_eq!(a, run());
    let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(!parsed["table"]["rows"].as_array().unwrap().is_empty());
}

#[test]
fn source_trait_is_object_safe() {
    let sources: Vec<Box<dyn FormulaSource>> = vec![
        Box::new(FixtureSource::new(bundled_generated())),
        Box::new(GrammarSource::new(&GrammarConfig::default()).unwrap()),
    ];
    assert_eq!(sources[0].label(2), "M3");
    assert_eq!(sources[1].label(2), "G3");
}
