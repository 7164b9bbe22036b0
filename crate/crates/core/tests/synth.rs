use std::f64::consts::PI;

use modwave_core::dsl::{self, evaluate, EvalOptions, EvaluationContext, TimeGrid};
use modwave_core::signal::{normalize_power, SampledSignal, Samples};
use modwave_core::synth::{
    formula_context, modulate_formula, modulate_reference, modulate_reference_with_bits, resolve_formula,
    Constellation, MessageSource, PulseShape, Scheme, SchemeConfig,
};

fn real(sig: &SampledSignal<f64>) -> &[f64] {
    sig.samples.as_real().expect("real signal")
}

fn small(scheme: Scheme) -> SchemeConfig {
    SchemeConfig {
        scheme,
        symbols: 64,
        seed: 17,
        ..SchemeConfig::default()
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn bpsk_center_sample_flips_sign() {
    let cfg = SchemeConfig {
        symbols: 2,
        ..small(Scheme::Bpsk)
    };
    let sig: SampledSignal<f64> = modulate_reference_with_bits(&cfg, &[false, true]).unwrap();
    let x = real(&sig);
    let sps = cfg.samples_per_symbol;
    for off in [sps / 2, sps / 2 + 1, sps / 2 + 3] {
        // same carrier phase one symbol apart (f_c / Rs is an integer)
        let a = x[off];
        let b = x[off + sps];
        assert!((a + b).abs() < 1e-12, "{a} vs {b}");
    }
    assert!(x[sps / 2].abs() > 0.5);
}

#[test]
fn ook_zero_bit_is_silent() {
    let cfg = SchemeConfig {
        symbols: 3,
        ..small(Scheme::Ook)
    };
    let sig: SampledSignal<f64> = modulate_reference_with_bits(&cfg, &[true, false, true]).unwrap();
    let sps = cfg.samples_per_symbol;
    assert!(real(&sig)[sps..2 * sps].iter().all(|v| *v == 0.0));
    assert!(real(&sig)[..sps].iter().any(|v| *v != 0.0));
}

#[test]
fn am_without_modulation_is_the_dsl_carrier() {
    let cfg = SchemeConfig {
        am_index: 0.0,
        message: MessageSource::Tone,
        ..small(Scheme::Am)
    };
    let sig: SampledSignal<f64> = modulate_reference(&cfg).unwrap();
    let carrier = dsl::parse_formula("A_c * cos(2*pi*f_c*t + phi_c)").unwrap();
    let mut ctx = EvaluationContext::new();
    ctx.constant("A_c", 1.0).constant("f_c", cfg.carrier_hz).constant("phi_c", 0.0);
    let grid = TimeGrid::new(cfg.sample_rate(), cfg.sample_count());
    let ev = evaluate(&carrier, &ctx, &grid, &EvalOptions::default()).unwrap();
    assert!(max_abs_diff(real(&sig), &ev.samples) < 1e-9);
}

/// Reference modulator and the matching corpus formula, fed the same bits,
/// must agree sample-wise.
#[test]
fn reference_matches_corpus_formulas() {
    let cases = [
        ("BPSK", Scheme::Bpsk, Scheme::Bpsk),
        ("QPSK", Scheme::Qpsk, Scheme::Qpsk),
        ("OOK", Scheme::Ook, Scheme::Ook),
        ("QAM", Scheme::Qam(16), Scheme::Qam(16)),
        ("QAM", Scheme::Qam(128), Scheme::Qam(128)),
        ("FSK", Scheme::Bfsk, Scheme::Bpsk),
        ("FSK", Scheme::Fsk, Scheme::Qpsk),
        ("PM", Scheme::Pm, Scheme::Bpsk),
        ("FM", Scheme::Fm, Scheme::Bpsk),
    ];
    for (id, reference, base) in cases {
        let cfg = small(reference.clone());
        let reference_sig: SampledSignal<f64> = modulate_reference(&cfg).unwrap();
        let fcfg = SchemeConfig {
            scheme: Scheme::Formula(id.into()),
            base,
            ..cfg.clone()
        };
        let resolved = resolve_formula(id, &[]).unwrap();
        let ctx = formula_context::<f64>(&fcfg).unwrap();
        assert_eq!(Some(&ctx.bits), reference_sig.origin_bits.as_ref(), "{id}");
        let formula_sig = modulate_formula(&resolved.expr, &ctx, &fcfg).unwrap();
        let err = max_abs_diff(real(&reference_sig), real(&formula_sig));
        assert!(err < 1e-8, "{reference}: max diff {err}");
    }
}

#[test]
fn am_tone_matches_corpus_formula() {
    let cfg = SchemeConfig {
        message: MessageSource::Tone,
        ..small(Scheme::Am)
    };
    let reference_sig: SampledSignal<f64> = modulate_reference(&cfg).unwrap();
    assert!(reference_sig.origin_bits.is_none());
    let fcfg = SchemeConfig {
        scheme: Scheme::Formula("AM".into()),
        base: Scheme::Bpsk,
        ..cfg.clone()
    };
    let resolved = resolve_formula("AM", &[]).unwrap();
    let ctx = formula_context::<f64>(&fcfg).unwrap();
    let formula_sig = modulate_formula(&resolved.expr, &ctx, &fcfg).unwrap();
    assert!(max_abs_diff(real(&reference_sig), real(&formula_sig)) < 1e-9);
}

#[test]
fn every_reference_is_deterministic_finite_and_consistent() {
    for scheme in Scheme::references() {
        let cfg = small(scheme.clone());
        let a: SampledSignal<f64> = modulate_reference(&cfg).unwrap();
        let b: SampledSignal<f64> = modulate_reference(&cfg).unwrap();
        assert_eq!(a, b, "{scheme}");
        assert!(a.samples.all_finite());
        assert_eq!(a.len(), cfg.sample_count());
        let bits = a.origin_bits.as_ref().unwrap();
        assert_eq!(bits.len(), a.bits_per_symbol.unwrap() * a.symbol_count().unwrap(), "{scheme}");
        let n = normalize_power(&a, 1.0).unwrap().signal;
        assert!((n.power() - 1.0).abs() < 1e-6, "{scheme}");
    }
}

#[test]
fn amplitude_does_not_change_normalized_power() {
    for amp in [0.01, 1.0, 37.0] {
        let cfg = SchemeConfig {
            amplitude: amp,
            ..small(Scheme::Qam(256))
        };
        let sig: SampledSignal<f64> = modulate_reference(&cfg).unwrap();
        let n = normalize_power(&sig, 1.0).unwrap();
        assert!((n.signal.power() - 1.0).abs() < 1e-6);
        assert!((n.scale * amp - sig.power().sqrt().recip() * amp).abs() < 1e-9);
    }
}

#[test]
fn rrc_shaping_keeps_symbols_and_power() {
    let cfg = SchemeConfig {
        pulse: PulseShape::rrc(),
        ..small(Scheme::Qpsk)
    };
    let sig: SampledSignal<f64> = modulate_reference(&cfg).unwrap();
    assert!(sig.samples.all_finite());
    // unit-energy symbols and unit-energy pulses: passband power near 1/2
    assert!((sig.power() - 0.5).abs() < 0.1, "{}", sig.power());
}

#[test]
fn f32_reference_tracks_f64() {
    let cfg = small(Scheme::Qam(64));
    let a: SampledSignal<f64> = modulate_reference(&cfg).unwrap();
    let b: SampledSignal<f32> = modulate_reference(&cfg).unwrap();
    let Samples::Real(bv) = &b.samples else { panic!() };
    let err = real(&a).iter().zip(bv).map(|(x, y)| (x - *y as f64).abs()).fold(0.0, f64::max);
    assert!(err < 1e-5);
}

#[test]
fn m1_without_extra_terms_is_pure_qam() {
    let cfg = SchemeConfig {
        scheme: Scheme::Formula("M1".into()),
        base: Scheme::Qam(16),
        constants: [("A".to_string(), 0.0), ("m".to_string(), 0.0)].into(),
        ..small(Scheme::Bpsk)
    };
    let resolved = resolve_formula("M1", &[]).unwrap();
    let ctx = formula_context::<f64>(&cfg).unwrap();
    let m1 = modulate_formula(&resolved.expr, &ctx, &cfg).unwrap();
    let qam: SampledSignal<f64> = modulate_reference(&SchemeConfig {
        scheme: Scheme::Qam(16),
        ..cfg.clone()
    })
    .unwrap();
    assert!(max_abs_diff(real(&m1), real(&qam)) < 1e-9);
}

#[test]
fn m2_with_zero_quadrature_matches_hand_composition() {
    let cfg = SchemeConfig {
        scheme: Scheme::Formula("M2".into()),
        base: Scheme::Qpsk,
        constants: [("Q(t)".to_string(), 0.0)].into(),
        ..small(Scheme::Bpsk)
    };
    let resolved = resolve_formula("M2", &[]).unwrap();
    let ctx = formula_context::<f64>(&cfg).unwrap();
    let sig = modulate_formula(&resolved.expr, &ctx, &cfg).unwrap();
    let x = real(&sig);
    let fs = cfg.sample_rate();
    let sps = cfg.samples_per_symbol;
    let qpsk = Constellation::<f64>::qpsk();
    for (n, v) in x.iter().enumerate() {
        let label = ctx.labels[n / sps];
        let i = qpsk.points[label].re;
        let d = modwave_core::synth::gray_decode(label) as f64;
        let w = 2.0 * PI * cfg.carrier_hz * (n as f64 / fs);
        let expect = i * w.cos() + w.cos() + PI * d * w.sin();
        assert!((v - expect).abs() < 1e-9, "sample {n}: {v} vs {expect}");
    }
}

#[test]
fn m3_runs_with_guarded_divisions() {
    let cfg = SchemeConfig {
        scheme: Scheme::Formula("M3".into()),
        ..small(Scheme::Bpsk)
    };
    let tx = modwave_core::synth::transmit::<f64>(&cfg, &[]).unwrap();
    assert!(tx.signal.samples.all_finite());
    assert!(tx.signal.guard_count > 0);
    assert!(tx.formula.unwrap().resolved.report.has_zero_divisor());
}

#[test]
fn nyquist_is_enforced() {
    let cfg = SchemeConfig {
        carrier_hz: 23_000.0,
        ..small(Scheme::Bpsk)
    };
    assert!(modulate_reference::<f64>(&cfg).is_err());
}
