use std::f64::consts::PI;

use backflow_core::circuit::{
    group_terms, measurement_circuit, measurement_plan, parity_sign, per_term_setting,
    prepare_backflow_circuit, synthesis_angles, Basis, MeasurementSetting, Plan, PrepAngles,
};
use backflow_core::experiment::{
    backflow_coefficients, closed_form_current, exact_current, ingest_measurements, run_exact,
    run_simulation, MeasuredData, Mode, SimulationConfig,
};
use backflow_core::pauli::{current_decomposition, dense_current_matrix, PauliString};
use backflow_core::statevector::{Gate, Statevector};
use backflow_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

/// `(1/4π) Σ_{m,k} conj(a_m) a_k (m+k) e^{i(k-m)θ0}` by the plain double sum.
fn current_by_double_sum(a: &[Complex64], theta0: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, am) in a.iter().enumerate() {
        for (k, ak) in a.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, (k as f64 - m as f64) * theta0);
            acc += am.conj() * ak * (m + k) as f64 * phase;
        }
    }
    acc.re / (4.0 * PI)
}

fn normalized_coefficients() -> impl Strategy<Value = Vec<Complex64>> {
    (1usize..=6).prop_flat_map(|n| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map(
            "zero vector",
            |raw| {
                let v: Vec<Complex64> =
                    raw.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                (norm > 1e-3).then(|| v.into_iter().map(|z| z / norm).collect())
            },
        )
    })
}

proptest! {
    #[test]
    fn exact_current_matches_double_sum(a in normalized_coefficients(), theta0 in -7.0f64..7.0) {
        let got = exact_current(&a, theta0).unwrap();
        let want = current_by_double_sum(&a, theta0);
        prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
    }

    #[test]
    fn exact_current_matches_dense_quadratic_form(a in normalized_coefficients()) {
        let n = a.len().trailing_zeros() as usize;
        let m = dense_current_matrix(n).unwrap();
        let mut q = Complex64::new(0.0, 0.0);
        for r in 0..a.len() {
            for k in 0..a.len() {
                q += a[r].conj() * m.get(r, k) as f64 * a[k];
            }
        }
        let got = exact_current(&a, 0.0).unwrap();
        prop_assert!((got - q.re / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn parity_sign_counts_support_bits(outcome in 0usize..8, word in "[IXZ]{3}") {
        let t: PauliString = word.parse().unwrap();
        let expected = if (outcome & t.support_mask()).count_ones().is_multiple_of(2) { 1 } else { -1 };
        prop_assert_eq!(parity_sign(&t, outcome), expected);
    }
}

#[test]
fn exact_current_requires_normalized_power_of_two() {
    let one = Complex64::new(1.0, 0.0);
    assert!(exact_current(&[one, one], 0.0).is_err());
    assert!(exact_current(&[one, one, one], 0.0).is_err());
    assert!(exact_current(&[], 0.0).is_err());
}

#[test]
fn backflow_coefficients_small_cases() {
    let c1 = backflow_coefficients(1).unwrap();
    let s5 = 5f64.sqrt();
    assert!((c1.amplitudes()[0] + 2.0 / s5).abs() < 1e-15);
    assert!((c1.amplitudes()[1] - 1.0 / s5).abs() < 1e-15);
    let p2: Vec<f64> = backflow_coefficients(2)
        .unwrap()
        .amplitudes()
        .iter()
        .map(|a| a * a)
        .collect();
    for (p, w) in p2.iter().zip([2.0 / 3.0, 1.0 / 6.0, 0.0, 1.0 / 6.0]) {
        assert!((p - w).abs() < 1e-15);
    }
    assert!(backflow_coefficients(0).is_err());
}

#[test]
fn closed_form_and_exact_report_agree() {
    for n in 1..=8 {
        let r = run_exact(n, 0.0).unwrap();
        assert_eq!(r.mode, Mode::Exact);
        let closed = closed_form_current(n).unwrap();
        assert!((r.j_estimate - closed).abs() < 1e-10, "N={n}");
        assert!((r.j_exact - closed).abs() < 1e-12, "N={n}");
        assert!(r.relative_error < 1e-10);
        assert_eq!(r.reassembled_current(), r.j_estimate);
    }
}

#[test]
fn theta0_only_moves_exact_value() {
    let r = run_exact(2, 1.0).unwrap();
    let a = backflow_coefficients(2).unwrap().to_complex();
    assert_eq!(r.theta0, 1.0);
    assert!((r.j_exact - current_by_double_sum(&a, 1.0)).abs() < 1e-12);
    assert!((r.j_estimate - closed_form_current(2).unwrap()).abs() < 1e-12);
}

#[test]
fn synthesized_circuits_track_coefficients() {
    for n in 1..=2 {
        let want = backflow_coefficients(n).unwrap();
        let got = prepare_backflow_circuit(n).unwrap().simulate().unwrap();
        for (g, w) in got.amplitudes().iter().zip(want.amplitudes()) {
            assert!((g.re - w).abs() < 1e-12 && g.im.abs() < 1e-12, "N={n}");
        }
    }
}

#[test]
fn synthesis_round_trips_random_real_states() {
    let cases: [&[f64]; 4] = [
        &[0.6, -0.8],
        &[-1.0, 0.0],
        &[0.5, 0.5, 0.0, std::f64::consts::FRAC_1_SQRT_2],
        &[0.0, -0.6, 0.0, 0.8],
    ];
    for amps in cases {
        let angles = synthesis_angles(amps).unwrap();
        let n = if amps.len() == 2 { 1 } else { 2 };
        let state = backflow_core::circuit::preparation_circuit(angles)
            .unwrap()
            .simulate()
            .unwrap();
        assert_eq!(state.n_qubits(), n);
        for (g, w) in state.amplitudes().iter().zip(amps) {
            assert!((g.re - w).abs() < 1e-12, "{amps:?}: {g} vs {w}");
        }
        if let PrepAngles::One { alpha } = angles {
            assert!((0.0..4.0 * PI).contains(&alpha));
        }
    }
    assert!(synthesis_angles(&[0.5, 0.5, 0.5, 0.5]).is_err());
    assert!(synthesis_angles(&[1.0, 0.0, 0.0]).is_err());
}

#[test]
fn grouping_uses_at_most_n_plus_one_settings() {
    for n in 1..=8 {
        let sum = current_decomposition(n).unwrap();
        let groups = group_terms(&sum).unwrap();
        assert!(groups.len() <= n + 1, "N={n}: {}", groups.len());
        let total: usize = groups.values().map(Vec::len).sum();
        assert_eq!(total, sum.len());
        for (setting, terms) in &groups {
            assert!(terms.iter().all(|t| setting.accepts(t)));
        }
        let per = measurement_plan(&sum, Plan::PerTerm).unwrap();
        assert_eq!(per.len(), sum.len());
    }
}

#[test]
fn per_term_settings_rotate_only_x_letters() {
    let sum = current_decomposition(2).unwrap();
    let mut gates: Vec<(String, Vec<usize>)> = sum
        .terms()
        .iter()
        .map(|t| {
            let c = measurement_circuit(&per_term_setting(t).unwrap()).unwrap();
            (t.word(), c.gates().iter().map(Gate::target).collect())
        })
        .collect();
    gates.sort();
    assert_eq!(
        gates,
        vec![
            ("IX".into(), vec![1]),
            ("IZ".into(), vec![]),
            ("XI".into(), vec![0]),
            ("XX".into(), vec![0, 1]),
            ("XZ".into(), vec![0]),
            ("ZI".into(), vec![]),
            ("ZX".into(), vec![1]),
        ]
    );
}

#[test]
fn setting_words_round_trip() {
    let s: MeasurementSetting = "XZX".parse().unwrap();
    assert_eq!(s.bases(), &[Basis::X, Basis::Z, Basis::X]);
    assert_eq!(s.to_string(), "XZX");
    assert!("XY".parse::<MeasurementSetting>().is_err());
    assert!("".parse::<MeasurementSetting>().is_err());
}

#[test]
fn simulations_are_seed_reproducible() {
    for plan in [Plan::Grouped, Plan::PerTerm] {
        let mut config = SimulationConfig::new(2);
        config.plan = plan;
        config.seed = 7;
        config.readout_flip = 0.02;
        let a = run_simulation(&config).unwrap();
        let b = run_simulation(&config).unwrap();
        assert_eq!(a, b);
        config.seed = 8;
        assert_ne!(run_simulation(&config).unwrap().j_estimate, a.j_estimate);
    }
}

#[test]
fn plans_converge_to_the_exact_value() {
    for plan in [Plan::Grouped, Plan::PerTerm] {
        let mut config = SimulationConfig::new(3);
        config.plan = plan;
        config.shots_per_setting = 400_000;
        config.seed = 11;
        let r = run_simulation(&config).unwrap();
        let se = r.j_std_error.unwrap();
        assert!((r.j_estimate - r.j_exact).abs() <= 5.0 * se, "{plan:?}");
        config.shots_per_setting = 4_000;
        let coarse = run_simulation(&config).unwrap().j_std_error.unwrap();
        let ratio = coarse / se;
        assert!(
            (8.0..12.0).contains(&ratio),
            "{plan:?}: error ratio {ratio}"
        );
    }
}

#[test]
fn shot_estimates_land_within_five_sigma() {
    for n in 1..=2 {
        let mut config = SimulationConfig::new(n);
        config.seed = 2024;
        let r = run_simulation(&config).unwrap();
        assert_eq!(r.shots_per_setting, Some(8000));
        assert!(r.j_estimate < 0.0);
        assert!((r.j_estimate - r.j_exact).abs() <= 5.0 * r.j_std_error.unwrap());
    }
}

#[test]
fn reingesting_a_report_reproduces_its_estimate() {
    for plan in [Plan::Grouped, Plan::PerTerm] {
        for n in 1..=4 {
            let mut config = SimulationConfig::new(n);
            config.plan = plan;
            config.seed = n as u64;
            config.shots_per_setting = 3000;
            let r = run_simulation(&config).unwrap();
            let json = serde_json::to_string(&r).unwrap();
            let data = MeasuredData::from_json(&json).unwrap();
            let back = ingest_measurements(&data).unwrap();
            assert!(
                (back.j_estimate - r.j_estimate).abs() <= 1e-15,
                "{plan:?} N={n}"
            );
            assert_eq!(back.j_std_error, r.j_std_error);
            let via = ingest_measurements(&MeasuredData::from_report(&r)).unwrap();
            assert_eq!(via.j_estimate, back.j_estimate);
        }
    }
}

#[test]
fn readout_noise_biases_toward_zero_parity() {
    let mut config = SimulationConfig::new(1);
    config.shots_per_setting = 200_000;
    config.readout_flip = 0.2;
    let noisy = run_simulation(&config).unwrap();
    // each ⟨V⟩ shrinks by (1 - 2p) for single-support strings
    let shrink = 1.0 - 2.0 * 0.2;
    let exact = run_exact(1, 0.0).unwrap();
    for (a, b) in noisy.terms.iter().zip(&exact.terms) {
        let se = a.std_error.unwrap();
        assert!(
            (a.expectation - shrink * b.expectation).abs() < 5.0 * se,
            "{}",
            a.word
        );
    }
}

#[test]
fn ingestion_rejects_bad_data() {
    let bad = [
        "",
        "{",
        r#"{"n": 1, "settings": []}"#,
        r#"{"n": 1, "settings": [{"basis_word": "X", "probabilities": {"0": 0.5, "1": 0.4}}]}"#,
        r#"{"n": 1, "settings": [{"basis_word": "X", "probabilities": {"0": 0.5, "10": 0.5}}]}"#,
        r#"{"n": 1, "settings": [{"basis_word": "X", "probabilities": {"0": 1.0}}]}"#,
        r#"{"n": 1, "settings": [{"basis_word": "XX", "probabilities": {"0": 1.0}}]}"#,
        r#"{"n": 1, "expectations": [{"word": "X", "value": 1.0}]}"#,
        r#"{"n": 1, "expectations": [{"word": "X", "value": 1.0}, {"word": "X", "value": 1.0}, {"word": "Z", "value": 0.0}]}"#,
        r#"{"n": 1, "expectations": [{"word": "Y", "value": 1.0}, {"word": "X", "value": 1.0}, {"word": "Z", "value": 0.0}]}"#,
        r#"{"n": 2, "settings": [{"basis_word": "XX", "terms": ["ZI"], "probabilities": {"00": 1.0}}]}"#,
    ];
    for text in bad {
        let outcome = MeasuredData::from_json(text).and_then(|d| ingest_measurements(&d));
        match outcome {
            Err(e) => assert!(e.is_data_error(), "{text}: {e:?}"),
            Ok(r) => panic!("accepted {text}: {}", r.j_estimate),
        }
    }
}

#[test]
fn counts_carry_standard_errors() {
    let text = r#"{"n": 1, "settings": [
        {"basis_word": "X", "counts": {"0": 766, "1": 7234}},
        {"basis_word": "Z", "counts": {"0": 6347, "1": 1653}}
    ]}"#;
    let r = ingest_measurements(&MeasuredData::from_json(text).unwrap()).unwrap();
    assert!(r.j_std_error.unwrap() > 0.0);
    assert!((r.j_estimate - (-0.031453)).abs() < 2e-4);
    for t in &r.terms {
        let shots = 8000.0;
        let se = ((1.0 - t.expectation * t.expectation) / shots).sqrt();
        assert!((t.std_error.unwrap() - se).abs() < 1e-15);
    }
}

#[test]
fn errors_are_classified() {
    assert!(!Error::NoQubits.is_data_error());
    assert!(Error::Data("x".into()).is_data_error());
    let mut config = SimulationConfig::new(1);
    config.shots_per_setting = 0;
    assert!(run_simulation(&config).is_err());
    config.shots_per_setting = 10;
    config.readout_flip = 0.7;
    assert!(run_simulation(&config).is_err());
    let one = Statevector::basis(1, 0).unwrap();
    assert_eq!(one.dim(), 2);
}
