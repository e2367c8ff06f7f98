//! End-to-end checks of the scenario engine: config parsing, unit handling,
//! output layout, validation, and reproducibility of emitted files.

use zeno_core::scenario::{
    classify_regime, run_scenario, validate, Regime, ScenarioConfig,
};

fn tmp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("zeno_scenario_{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn fig3_small_grid_runs_and_emits_expected_columns() {
    let cfg = ScenarioConfig::from_toml_str(
        r#"
scenario = "fig3"
frequency_convention = "angular"
seed = 11

[parameters]
ratio_min = 5.0
ratio_max = 100.0
points = 5
"#,
    )
    .unwrap();
    let out = tmp_dir("fig3");
    let summary = run_scenario(&cfg, Some(&out), Some(2), false).unwrap();
    assert_eq!(summary.tables.len(), 1);
    let t = &summary.tables[0];
    for name in [
        "gamma_over_omega",
        "f_exact",
        "f_first_order",
        "f_herald_exact",
        "f_herald_approx",
        "f_second_order",
    ] {
        assert!(t.column_index(name).is_some(), "missing column {name}");
    }
    assert_eq!(t.rows.len(), 5);
    // Heralded beats unheralded on every grid point.
    let fh = t.column("f_herald_exact").unwrap();
    let fe = t.column("f_exact").unwrap();
    for (h, e) in fh.iter().zip(fe.iter()) {
        assert!(h >= e);
    }
    // Files exist: one CSV plus the sidecar.
    assert!(summary.files[0].exists());
    assert!(summary.sidecar.exists());
    let body = std::fs::read_to_string(&summary.files[0]).unwrap();
    assert!(body.starts_with("# scenario = fig3"));
    assert!(body.contains("gamma_over_omega [1]"));
}

#[test]
fn sweep_axes_expand_and_rerun_is_byte_identical() {
    let text = r#"
scenario = "fig6"
frequency_convention = "divided_by_2pi"
seed = 3

[parameters]
omega = "1 MHz"
n_fock = 6
chi_fe = "15 MHz"
delta_ce = "-15 MHz"

[sweep.epsilon]
values = ["0.5 MHz", "1 MHz"]
"#;
    let cfg = ScenarioConfig::from_toml_str(text).unwrap();
    let out_a = tmp_dir("fig6_a");
    let out_b = tmp_dir("fig6_b");
    let sum_a = run_scenario(&cfg, Some(&out_a), Some(2), false).unwrap();
    let sum_b = run_scenario(&cfg, Some(&out_b), Some(1), false).unwrap();
    assert_eq!(sum_a.tables[0].rows.len(), 2);
    let bytes_a = std::fs::read(&sum_a.files[0]).unwrap();
    let bytes_b = std::fs::read(&sum_b.files[0]).unwrap();
    assert_eq!(bytes_a, bytes_b, "rerun must be byte-identical");
}

#[test]
fn missing_unit_and_unknown_scenario_are_reported() {
    let cfg = ScenarioConfig::from_toml_str(
        r#"
scenario = "fig6"
frequency_convention = "angular"

[parameters]
kappa = 5.0
"#,
    )
    .unwrap();
    let report = validate(&cfg).unwrap();
    assert!(!report.ok());
    assert!(
        report
            .violations
            .iter()
            .any(|v| v.contains("kappa") && v.contains("unit")),
        "violations: {:?}",
        report.violations
    );

    let bad = ScenarioConfig::from_toml_str(
        r#"
scenario = "fig99"
frequency_convention = "angular"
"#,
    )
    .unwrap();
    assert!(validate(&bad).is_err());
}

#[test]
fn validation_classifies_regimes() {
    // Ω/2π = 1 MHz with κ/2π = 5 MHz sits at the Markovian-to-shallow
    // boundary; the decoupled regime needs the drive to outrun Δχ²/κ.
    let omega = 2.0 * std::f64::consts::PI;
    let kappa = 5.0 * omega;
    assert_eq!(
        classify_regime(omega, kappa, Some(100.0 * omega)),
        Regime::MarkovianShallowBoundary
    );
    let dchi: f64 = 3.0;
    let kappa = 10.0;
    let omega = 10.0 * dchi * dchi / kappa;
    assert_eq!(
        classify_regime(omega, kappa, Some(dchi)),
        Regime::Decoupled
    );
    assert_eq!(classify_regime(1.0, 1.5, None), Regime::ShallowNonMarkovian);
    assert_eq!(classify_regime(1.0, 0.5, None), Regime::DeepNonMarkovian);
    assert_eq!(classify_regime(1.0, 50.0, None), Regime::Markovian);

    let cfg = ScenarioConfig::from_toml_str(
        r#"
scenario = "fig6"
frequency_convention = "divided_by_2pi"

[parameters]
omega = "1 MHz"
kappa = "5 MHz"
"#,
    )
    .unwrap();
    let report = validate(&cfg).unwrap();
    assert!(report.ok(), "violations: {:?}", report.violations);
    assert_eq!(report.regime, Some(Regime::MarkovianShallowBoundary));
    assert!(report.memory_bytes.unwrap() > 0);
}
