//! End-to-end checks of the experiment harness.

use thz_core::harness::{run_nmse_sweep, EstimatorKind, ExperimentConfig, Preset, ResultTable, Setup, TrialOutcome};

fn small(trials: usize, first_trial: u64) -> ExperimentConfig {
    ExperimentConfig {
        trials,
        first_trial,
        seed: 11,
        snr_db: vec![0.0, 20.0],
        estimators: vec![EstimatorKind::Ls, EstimatorKind::Omp],
        bcrlb: false,
        calibration_draws: 10,
        ..ExperimentConfig::preset(Preset::System2)
    }
}

fn flatten(outcomes: &[TrialOutcome]) -> Vec<(u64, u64, String, u64, &'static str, Option<u64>)> {
    outcomes
        .iter()
        .flat_map(|o| {
            o.records.iter().map(move |r| {
                (
                    o.trial,
                    o.seed,
                    r.estimator.clone(),
                    r.snr_db.to_bits(),
                    r.metric,
                    r.value.as_ref().ok().map(|v| v.to_bits()),
                )
            })
        })
        .collect()
}

#[test]
fn split_runs_reproduce_the_whole() {
    let whole = Setup::new(&small(4, 0)).unwrap().nmse_trials();
    let mut parts = Setup::new(&small(2, 0)).unwrap().nmse_trials();
    parts.extend(Setup::new(&small(2, 2)).unwrap().nmse_trials());
    assert_eq!(whole.len(), 4);
    assert_eq!(flatten(&whole), flatten(&parts));
}

#[test]
fn config_round_trips_through_toml_and_json() {
    let cfg = small(3, 1);
    let text = cfg.to_toml_string().unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);

    let json = r#"{"preset": "system2", "trials": 7, "adc_bits": ["inf", 4], "estimators": ["bl"]}"#;
    let parsed = ExperimentConfig::from_json_str(json).unwrap();
    assert_eq!(parsed.trials, 7);
    assert_eq!(parsed.estimators, vec![EstimatorKind::Bl]);
    parsed.validate().unwrap();
}

#[test]
fn bad_configs_are_rejected() {
    assert!(ExperimentConfig::from_toml_str("trails = 3").is_err());
    assert!(ExperimentConfig::from_toml_str("preset = \"system9\"").is_err());
    let cfg = ExperimentConfig {
        trials: 0,
        ..small(1, 0)
    };
    assert!(cfg.validate().is_err());
    let cfg = ExperimentConfig {
        snr_db: vec![f64::NAN],
        ..small(1, 0)
    };
    assert!(cfg.validate().is_err());
}

#[test]
fn high_snr_sweep_recovers_the_channel() {
    let cfg = ExperimentConfig {
        snr_db: vec![0.0, 40.0],
        trials: 3,
        ..small(3, 0)
    };
    let table = run_nmse_sweep(&cfg).unwrap();
    let nmse = |est: &str, snr: f64| table.mean(est, snr, "nmse");
    // LS sees fewer measurements than unknowns, so it only has to improve
    assert!(nmse("ls", 40.0) < nmse("ls", 0.0));
    // the angle grid leaves an off-grid floor for OMP
    assert!(nmse("omp", 40.0) < 0.15, "omp nmse {}", nmse("omp", 40.0));

    let csv = table.to_csv().unwrap();
    assert!(csv.starts_with("experiment,estimator,snr_db,metric,mean,stderr,trials,failures,seed,version\n"));
    let back = ResultTable::from_csv(&csv).unwrap();
    assert_eq!(back.rows, table.rows);
}
