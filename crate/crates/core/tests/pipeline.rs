use rsma_mbdl::harness::{
    emit_report, manifest_path, parse_config, run_overhead_experiment, run_ser_experiment, to_csv, Format, Manifest,
    Scenario, CSV_HEADER,
};
use rsma_mbdl::modem::Modulation;
use rsma_mbdl::receivers::ReceiverKind;
use rsma_mbdl::training::Pattern;

fn quick(pattern: Pattern) -> Scenario {
    let mut sc = Scenario::new(4, 2, vec![15.0]);
    sc.trials = 3;
    sc.data_symbols = 200;
    sc.seed = 9;
    sc.training.pattern = pattern;
    sc
}

#[test]
fn every_pattern_runs_end_to_end() {
    for pattern in [Pattern::Extensive, Pattern::Minimal, Pattern::Interpolating] {
        let mut sc = quick(pattern);
        sc.training.blocks = 4;
        let rep = run_ser_experiment(&sc).unwrap();
        for r in &rep.rows {
            assert!((0.0..=1.0).contains(&r.ser), "{pattern}: {r:?}");
            assert_eq!(r.trials + r.excluded, 3);
        }
    }
}

#[test]
fn mixed_modulations_and_three_users() {
    let mut sc = quick(Pattern::Minimal);
    sc.k = 3;
    sc.nt = 4;
    sc.training.blocks = 2;
    sc.common_modulation = Modulation::Qam16;
    sc.private_modulation = rsma_mbdl::harness::PrivateModulation::PerUser(vec![
        Modulation::Qpsk,
        Modulation::Qam16,
        Modulation::Qpsk,
    ]);
    sc.users = vec![2];
    let rep = run_ser_experiment(&sc).unwrap();
    assert_eq!(rep.rows.len(), 4 * 2);
    assert!(rep.rows.iter().all(|r| r.stream.ends_with("_2")));
    // 16 common x 16 top-private symbols per block
    let mbdl = rep.rows.iter().find(|r| r.receiver == ReceiverKind::Mbdl).unwrap();
    assert!((mbdl.overhead_pct - 100.0 * 512.0 / 712.0).abs() < 1e-9);
}

#[test]
fn overloaded_regime_runs() {
    let mut sc = quick(Pattern::Interpolating);
    sc.nt = 2;
    sc.k = 3;
    sc.receivers = vec![ReceiverKind::Map, ReceiverKind::Mbdl];
    let rep = run_ser_experiment(&sc).unwrap();
    assert_eq!(rep.rows.len(), 2 * 3 * 2);
}

#[test]
fn csv_and_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sc = parse_config(include_str!("../configs/qpsk_minimal.toml")).unwrap();
    let mut sc = Scenario {
        trials: 2,
        data_symbols: 100,
        snr_db: vec![10.0],
        ..sc
    };
    sc.receivers = vec![ReceiverKind::Map, ReceiverKind::SicImperfect];
    let rep = run_ser_experiment(&sc).unwrap();
    let out = dir.path().join("ser.csv");
    let files = emit_report(&rep, &sc, &out, Format::Csv).unwrap();
    assert_eq!(files, vec![out.clone(), manifest_path(&out)]);

    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv, to_csv(&rep));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), rep.rows.len());

    let manifest = Manifest::from_json(&std::fs::read_to_string(manifest_path(&out)).unwrap()).unwrap();
    assert_eq!(manifest.scenario, sc);
    assert_eq!(manifest.seed, 1);
    assert_eq!(manifest.binomial_check.len(), rep.rows.len());
    for (check, row) in manifest.binomial_check.iter().zip(&rep.rows) {
        let se = check.binomial_std_err.unwrap();
        assert!((se - (row.ser * (1.0 - row.ser) / row.symbols as f64).sqrt()).abs() < 1e-15);
    }
}

#[test]
fn json_report_embeds_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = quick(Pattern::Minimal);
    sc.receivers = vec![ReceiverKind::Map];
    let rep = run_ser_experiment(&sc).unwrap();
    let out = dir.path().join("ser.json");
    emit_report(&rep, &sc, &out, Format::Json).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let manifest: Manifest = serde_json::from_value(doc["manifest"].clone()).unwrap();
    assert_eq!(manifest.scenario, sc);
    assert_eq!(doc["rows"].as_array().unwrap().len(), rep.rows.len());
}

#[test]
fn same_seed_same_report_different_seed_different_report() {
    let sc = quick(Pattern::Minimal);
    let a = run_ser_experiment(&sc).unwrap();
    assert_eq!(a, run_ser_experiment(&sc).unwrap());
    let other = Scenario { seed: 10, ..sc };
    assert_ne!(a, run_ser_experiment(&other).unwrap());
}

#[test]
fn overhead_sweep_matches_block_sizes() {
    let mut sc = quick(Pattern::Minimal);
    sc.snr_db = vec![0.0, 20.0];
    sc.data_symbols = 256;
    let rows = run_overhead_experiment(&sc).unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r.mean_training_symbols, 320.0);
        assert!((r.overhead_pct - 100.0 * 320.0 / 576.0).abs() < 1e-12);
    }
}
