//! Scenario drivers: determinism, round-trips and trivial oracles.

use kik_core::scenarios::config::{InverseKind, RunMode, ScenarioConfig, ScenarioKind};
use kik_core::scenarios::output::{csv_string, json_string, CSV_HEADER};
use kik_core::scenarios::{find, run};
use kik_core::KikError;

fn small(kind: ScenarioKind) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default_for(kind);
    match kind {
        ScenarioKind::Ising => {
            cfg.scenario.n_qubits = Some(3);
            cfg.scenario.trotter_steps = Some(3);
            cfg.noise.jump_weights = Some(vec![0.5, 1.7, 0.3]);
            cfg.mitigation.orders = vec![0, 1];
        }
        ScenarioKind::Drift => cfg.scenario.sets = Some(vec![1, 2]),
        ScenarioKind::SwapChain => cfg.scenario.repetitions = Some(2),
        _ => {}
    }
    cfg
}

#[test]
fn csv_is_byte_identical_across_runs() {
    for kind in ScenarioKind::ALL {
        let cfg = small(kind);
        let a = csv_string(&run(&cfg).unwrap().records).unwrap();
        let b = csv_string(&run(&cfg).unwrap().records).unwrap();
        assert_eq!(a, b, "{kind}");
        assert!(a.starts_with(&CSV_HEADER.join(",")));
    }
}

#[test]
fn sampled_swap_chain_is_seed_deterministic() {
    let mut cfg = small(ScenarioKind::SwapChain);
    cfg.scenario.mode = Some(RunMode::Sampled);
    cfg.scenario.shots = Some(2000);
    cfg.noise.xi = vec![0.01];
    cfg.noise.overrotation = Some(vec![0.0]);
    cfg.mitigation.orders = vec![0, 1];
    cfg.mitigation.rc = Some(vec![false, true]);
    cfg.mitigation.rc_count = Some(4);
    let a = csv_string(&run(&cfg).unwrap().records).unwrap();
    let b = csv_string(&run(&cfg).unwrap().records).unwrap();
    assert_eq!(a, b);
    cfg.scenario.seed += 1;
    let c = csv_string(&run(&cfg).unwrap().records).unwrap();
    assert_ne!(a, c);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    cfg.scenario.seed -= 1;
    let single = pool.install(|| csv_string(&run(&cfg).unwrap().records).unwrap());
    assert_eq!(a, single);
}

#[test]
fn emitted_defaults_parse_and_run_identically() {
    for kind in [
        ScenarioKind::Saturation,
        ScenarioKind::BoundsSweep,
        ScenarioKind::CnotCalib,
    ] {
        let direct = ScenarioConfig::default_for(kind);
        let parsed = ScenarioConfig::parse(&direct.to_toml()).unwrap();
        assert_eq!(parsed, direct);
        let a = csv_string(&run(&direct).unwrap().records).unwrap();
        let b = csv_string(&run(&parsed).unwrap().records).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn records_carry_seed_hash_and_ideal() {
    for kind in ScenarioKind::ALL {
        let cfg = small(kind);
        let out = run(&cfg).unwrap();
        assert!(!out.records.is_empty());
        for r in &out.records {
            assert_eq!(r.seed, cfg.scenario.seed);
            assert_eq!(r.config_hash, cfg.hash());
            assert_eq!(r.scenario, kind.name());
            if r.ideal.is_finite() {
                assert!((r.bias - (r.estimate - r.ideal)).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn json_output_round_trips() {
    let out = run(&small(ScenarioKind::Saturation)).unwrap();
    let text = json_string(&out.records).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v.as_array().unwrap().len(), out.records.len());
}

#[test]
fn noiseless_swap_chain_survives() {
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::SwapChain);
    cfg.noise.xi = vec![0.0];
    cfg.noise.overrotation = Some(vec![0.0]);
    let out = run(&cfg).unwrap();
    for r in &out.records {
        assert!(
            (r.estimate - 1.0).abs() < 1e-9,
            "{} {} {}",
            r.point,
            r.order,
            r.estimate
        );
    }
}

#[test]
fn swap_chain_orderings() {
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::SwapChain);
    cfg.noise.xi = vec![0.01];
    cfg.noise.overrotation = Some(vec![0.0]);
    cfg.mitigation.inverse = Some(vec![InverseKind::Pulse]);
    cfg.mitigation.rc = Some(vec![false]);
    let out = run(&cfg).unwrap();
    let point = "xi=0.01;eps=0;inverse=pulse;rc=0";
    let unmitigated = find(&out.records, point, "survival", 0, "1").unwrap().estimate;
    assert!((unmitigated - 0.5).abs() < 0.05, "{unmitigated}");
    for m in 1..=3 {
        let taylor = find(&out.records, point, "survival", m, "1").unwrap().bias.abs();
        let adaptive = find(&out.records, point, "survival", m, "mu^2").unwrap().bias.abs();
        assert!(adaptive <= taylor, "M={m}: {adaptive} > {taylor}");
    }

    let mut cfg = ScenarioConfig::default_for(ScenarioKind::SwapChain);
    cfg.noise.xi = vec![0.002];
    cfg.noise.overrotation = Some(vec![0.02]);
    cfg.mitigation.inverse = Some(vec![InverseKind::Pulse]);
    let out = run(&cfg).unwrap();
    let bias = |rc: u8| {
        out.records
            .iter()
            .filter(|r| r.point == format!("xi=0.002;eps=0.02;inverse=pulse;rc={rc}") && r.order == 3 && r.g == "1")
            .map(|r| r.bias.abs())
            .fold(0.0, f64::max)
    };
    assert!(bias(1) <= 0.5 * bias(0), "rc {} vs {}", bias(1), bias(0));
}

#[test]
fn drift_off_is_set_independent() {
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::Drift);
    cfg.noise.drift = Some(false);
    let out = run(&cfg).unwrap();
    for m in [1, 2] {
        let vals: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.order == m)
            .map(|r| r.estimate)
            .collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 1e-9, "M={m} spread {spread}");
    }
}

#[test]
fn bounds_sweep_zero_noise_row_vanishes() {
    let out = run(&ScenarioConfig::default_for(ScenarioKind::BoundsSweep)).unwrap();
    let zero: Vec<_> = out
        .records
        .iter()
        .filter(|r| r.xi == 0.0 && r.quantity == "bias")
        .collect();
    assert!(!zero.is_empty());
    for r in zero {
        assert!(r.bias.abs() < 1e-12);
        assert_eq!((r.eq16, r.eq17, r.eq18), (Some(0.0), Some(0.0), Some(0.0)));
    }
    assert!(out
        .records
        .iter()
        .any(|r| r.quantity == "bias_to_eq18" && r.point.starts_with("model=dephasing")));
}

#[test]
fn saturation_plateau_drops_with_half_noise() {
    let out = run(&ScenarioConfig::default_for(ScenarioKind::Saturation)).unwrap();
    let e = |xi: &str| {
        find(&out.records, &format!("xi={xi}"), "relative_error", 8, "1")
            .unwrap()
            .estimate
    };
    let ratio = e("0.02") / e("0.01");
    assert!((3.0..5.0).contains(&ratio), "{ratio}");
}

#[test]
fn degenerate_amplitude_grid_is_rejected() {
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::CnotCalib);
    cfg.scenario.amplitude_grid = Some(vec![1.0, 1.0]);
    assert!(matches!(run(&cfg), Err(KikError::RegressionDegenerate(_))));
}

#[test]
fn config_errors() {
    let text = ScenarioConfig::default_for(ScenarioKind::Drift).to_toml();
    let bad = text.replace("[noise]", "[noise]\ncolour = 1");
    assert!(matches!(ScenarioConfig::parse(&bad), Err(KikError::InvalidSpec(_))));
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::Saturation);
    cfg.noise.jump_weights = Some(vec![1.0]);
    assert!(cfg.validate().unwrap_err().is_input_error());
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::Ising);
    cfg.mitigation.g = vec!["sqrt".into()];
    assert!(run(&cfg).is_err());
}
