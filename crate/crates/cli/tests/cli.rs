//! End-to-end checks of the qkdsecval binary: schema validity of every
//! JSON output, exit-code conventions, seed echoing, determinism, and the
//! numbers the shipped example configuration must reproduce.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qkdsecval_core::keyrate::{
    accepted_bit_prob, asymptotic_rate, finite_key_length, holevo_capacity, EpsilonBudget,
    FiniteKeyInputs, RateInputs,
};
use qkdsecval_core::SystemParams;

fn run(args: &[&str]) -> Output {
    run_with_env(args, &[])
}

fn run_with_env(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qkdsecval"));
    cmd.args(args);
    // Keep the outer environment from leaking a registry store into tests.
    cmd.env_remove("QKDSECVAL_STORE");
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stdout_text(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn example_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/example_system.json")
        .display()
        .to_string()
}

fn alice_chain() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/alice_scw.json")
        .display()
        .to_string()
}

/// Writes a mutated copy of the example config and returns its path.
fn config_variant(
    dir: &Path,
    name: &str,
    mutate: impl FnOnce(&mut serde_json::Value),
) -> PathBuf {
    let text = fs::read_to_string(example_config()).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    mutate(&mut value);
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn assert_schema(name: &str, instance: &serde_json::Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    let schema: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|err| format!("{err} at {}", err.instance_path))
        .collect();
    assert!(errors.is_empty(), "{name} rejected output: {errors:#?}");
}

fn example_params() -> SystemParams {
    SystemParams {
        mu0: 4.0,
        modulation_index: 0.05,
        interaction_order: 2,
        beta: 0.05,
        eta_line: 0.5,
        eta_bob: 0.27,
        rep_rate_hz: 1.0e8,
        wavelength_m: 1.55e-6,
        sift_factor: 0.5,
    }
}

#[test]
fn keyrate_reproduces_the_worked_example() {
    let out = run(&["keyrate", "--config", &example_config(), "--format", "json"]);
    let report = stdout_json(&out);
    assert_schema("keyrate.schema.json", &report);

    // The binary must wire the library functions through untouched.
    let params = example_params();
    let chi = holevo_capacity(&params).unwrap();
    let p_b = accepted_bit_prob(&params).unwrap();
    let rate = asymptotic_rate(&RateInputs {
        nu_s: 1.0e8,
        p_b,
        qber: 0.02,
        f_ec: 1.15,
        chi,
    })
    .unwrap();
    assert_eq!(report["chi"].as_f64().unwrap(), chi);
    assert_eq!(report["accepted_bit_prob"].as_f64().unwrap(), p_b);
    assert_eq!(
        report["bits_per_second"].as_f64().unwrap(),
        rate.bits_per_second
    );
    assert_eq!(report["abort"], serde_json::json!(false));

    // And the documented figures hold to float accumulation accuracy.
    assert!((chi - 0.18947174424773594).abs() < 1e-12);
    assert!((rate.bits_per_second - 514982.0267807375).abs() < 1e-6);
}

#[test]
fn keyrate_text_output_prints_the_rate() {
    let out = run(&["keyrate", "--config", &example_config()]);
    let text = stdout_text(&out);
    assert!(text.contains("key rate: 514982.02678"), "{text}");
    assert!(text.contains("abort: no"), "{text}");
}

#[test]
fn keyrate_reports_abort_at_half_error_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_variant(dir.path(), "half_error.json", |value| {
        value["channel"]["qber"] = serde_json::json!(0.5);
    });
    let out = run(&[
        "keyrate",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&out), 0, "abort is an answer, not an error");
    let report = stdout_json(&out);
    assert_eq!(report["abort"], serde_json::json!(true));
    assert_eq!(report["bits_per_second"].as_f64().unwrap(), 0.0);
}

#[test]
fn keyrate_with_dark_source_yields_zero_rate() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_variant(dir.path(), "dark.json", |value| {
        value["system"]["mu0"] = serde_json::json!(0.0);
    });
    let out = run(&[
        "keyrate",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["chi"].as_f64().unwrap(), 0.0);
    assert_eq!(report["accepted_bit_prob"].as_f64().unwrap(), 0.0);
    assert_eq!(report["bits_per_second"].as_f64().unwrap(), 0.0);
}

#[test]
fn finite_key_defaults_and_echoes_the_epsilon_budget() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_variant(dir.path(), "no_epsilon.json", |value| {
        value.as_object_mut().unwrap().remove("epsilon");
    });
    let out = run(&[
        "finite-key",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let report = stdout_json(&out);
    assert_schema("finite_key.schema.json", &report);
    assert_eq!(report["eps_s"].as_f64().unwrap(), 1e-9);
    assert_eq!(report["eps_ec"].as_f64().unwrap(), 1e-9);
    assert_eq!(report["eps_pa"].as_f64().unwrap(), 1e-9);

    let chi = holevo_capacity(&example_params()).unwrap();
    let expected = finite_key_length(&FiniteKeyInputs {
        n: 1_000_000,
        k: 100_000,
        qber: 0.02,
        chi,
        f_ec: 1.15,
        budget: EpsilonBudget {
            eps_s: 1e-9,
            eps_ec: 1e-9,
            eps_pa: 1e-9,
        },
    })
    .unwrap();
    assert_eq!(
        report["length_bits"].as_i64().unwrap(),
        expected.length_bits
    );
    assert_eq!(report["abort"], serde_json::json!(expected.abort));
}

#[test]
fn tha_reports_the_transmitter_probe_budget() {
    let out = run(&[
        "tha",
        "--chain",
        &alice_chain(),
        "--reflector",
        "line_filter",
        "--mu-out",
        "1e-6",
        "--format",
        "json",
    ]);
    let report = stdout_json(&out);
    assert_schema("tha.schema.json", &report);
    assert_eq!(report["round_trip_loss_db"].as_f64().unwrap(), 193.4);
    assert_eq!(report["one_way_loss_db"].as_f64().unwrap(), 74.2);
    let photons = report["photons_per_pulse"].as_f64().unwrap();
    assert!((photons - 2.2e13).abs() < 0.02 * 2.2e13, "{photons}");
    let watts = report["cw_power_w"].as_f64().unwrap();
    assert!((watts - 280.0).abs() < 0.02 * 280.0, "{watts}");

    // Passing the example config must not change anything: its rate and
    // wavelength match the built-in fallbacks.
    let with_config = run(&[
        "tha",
        "--chain",
        &alice_chain(),
        "--reflector",
        "line_filter",
        "--mu-out",
        "1e-6",
        "--config",
        &example_config(),
        "--format",
        "json",
    ]);
    assert_eq!(out.stdout, with_config.stdout);
}

#[test]
fn attack_usd_wires_the_filter_bound() {
    let out = run(&[
        "attack",
        "usd",
        "--config",
        &example_config(),
        "--format",
        "json",
    ]);
    let report = stdout_json(&out);
    assert_schema("attack_usd.schema.json", &report);
    let expected = qkdsecval_core::attack::usd_filter_success(0.05).unwrap();
    assert_eq!(report["success_prob"].as_f64().unwrap(), expected);
    assert!((expected - 4.987531172069825e-3).abs() < 1e-12);
}

#[test]
fn attack_blinding_reports_window_and_reference_power() {
    let out = run(&[
        "attack",
        "blinding",
        "--config",
        &example_config(),
        "--format",
        "json",
    ]);
    let report = stdout_json(&out);
    assert_schema("attack_blinding.schema.json", &report);
    assert_eq!(
        report["trigger_window_w"],
        serde_json::json!([1.5e-4, 3.0e-4])
    );
    assert_eq!(report["trigger_power_w"].as_f64().unwrap(), 2.0e-4);
    assert_eq!(
        report["required_reference_power_w"].as_f64().unwrap(),
        2.0e-4 / 0.05
    );
    assert_eq!(report["trigger_in_window"], serde_json::json!(true));

    // Without a configured trigger the window's lower edge is used, which
    // for these calibration powers demands 3 mW on the reference.
    let dir = tempfile::tempdir().unwrap();
    let config = config_variant(dir.path(), "no_trigger.json", |value| {
        value["attack"]
            .as_object_mut()
            .unwrap()
            .remove("trigger_power_w");
    });
    let out = run(&[
        "attack",
        "blinding",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["trigger_power_w"].as_f64().unwrap(), 1.5e-4);
    assert_eq!(
        report["required_reference_power_w"].as_f64().unwrap(),
        1.5e-4 / 0.05
    );
}

#[test]
fn attack_splitting_echoes_seed_and_repeats_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_variant(dir.path(), "short_mc.json", |value| {
        value["attack"]["n_rounds"] = serde_json::json!(20_000);
    });
    let args = [
        "attack",
        "splitting",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "9",
        "--format",
        "json",
    ];
    let first = run(&args);
    let report = stdout_json(&first);
    assert_schema("attack_outcome.schema.json", &report);
    // The flag wins over the config's seed of 42 and is echoed.
    assert_eq!(report["seed"].as_u64().unwrap(), 9);
    assert_eq!(report["rounds"].as_u64().unwrap(), 20_000);

    let second = run(&args);
    assert_eq!(first.stdout, second.stdout, "rerun differs");

    let text = stdout_text(&run(&[
        "attack",
        "splitting",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "9",
    ]));
    assert!(text.contains("seed: 9"), "{text}");
}

#[test]
fn attack_faked_state_controls_the_blinded_receiver() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_variant(dir.path(), "short_fs.json", |value| {
        value["attack"]["n_rounds"] = serde_json::json!(20_000);
    });
    let out = run(&[
        "attack",
        "faked-state",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let report = stdout_json(&out);
    assert_schema("attack_outcome.schema.json", &report);
    // Inside the trigger window the attack induces no errors, knows every
    // accepted bit, and keeps the reference monitor fully satisfied.
    assert_eq!(report["qber"].as_f64().unwrap(), 0.0);
    assert_eq!(report["leak_fraction"].as_f64().unwrap(), 1.0);
    assert_eq!(report["ref_click_rate"].as_f64().unwrap(), 1.0);
    assert_eq!(report["feasible"], serde_json::json!(true));
    assert_eq!(report["seed"].as_u64().unwrap(), 42);
}

#[test]
fn attack_ref_scan_finds_the_frontier() {
    let out = run(&[
        "attack",
        "ref-scan",
        "--config",
        &example_config(),
        "--format",
        "json",
    ]);
    let report = stdout_json(&out);
    assert_schema("ref_scan.schema.json", &report);
    assert_eq!(report["points"].as_array().unwrap().len(), 4);
    // The example receiver runs in the linear regime, so any attenuation
    // below nominal shows up in the reference counts.
    assert_eq!(report["frontier_alpha"].as_f64().unwrap(), 1.0);
    assert_eq!(report["sideband_suppression"].as_f64().unwrap(), 1.0);
}

#[test]
fn registry_seed_then_csv_report_lists_all_rows() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("registry.json");
    let store = store.to_str().unwrap();

    let out = run(&["registry", "seed", "--store", store, "--format", "json"]);
    let report = stdout_json(&out);
    assert_schema("registry_seed.schema.json", &report);
    assert_eq!(report["records"].as_u64().unwrap(), 10);

    let csv = stdout_text(&run(&[
        "registry", "report", "--store", store, "--format", "csv",
    ]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 11, "header plus ten records:\n{csv}");
    assert_eq!(
        lines[0],
        "id,title,layers,risk,hardness_current,hardness_initial,requires_lab_testing,status"
    );
}

#[test]
fn registry_set_moves_a_record_out_of_the_unrated_filter() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("registry.json");
    let store = store.to_str().unwrap();
    run(&["registry", "seed", "--store", store]);

    let out = run(&[
        "registry",
        "set",
        "--store",
        store,
        "--id",
        "time-shift-attack",
        "--hardness",
        "C0",
        "--note",
        "efficiency curves measured, countermeasure in design",
        "--format",
        "json",
    ]);
    let report = stdout_json(&out);
    assert_schema("registry_set.schema.json", &report);
    assert_eq!(report["hardness"], serde_json::json!("C0"));

    let out = run(&[
        "registry", "report", "--store", store, "--hardness", "CX", "--format", "json",
    ]);
    let report = stdout_json(&out);
    assert_schema("registry_report.schema.json", &report);
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["id"], serde_json::json!("intersymbol-interference"));
    assert_eq!(report["verdict"], serde_json::json!("inadequate"));

    // Rating the two carried-over records at C2 flips the verdict.
    run(&[
        "registry",
        "set",
        "--store",
        store,
        "--id",
        "time-shift-attack",
        "--hardness",
        "C2",
        "--note",
        "delay randomization verified in the lab",
    ]);
    run(&[
        "registry",
        "set",
        "--store",
        store,
        "--id",
        "intersymbol-interference",
        "--hardness",
        "C2",
        "--note",
        "driver bandwidth verified against pattern effects",
    ]);
    let report = stdout_json(&run(&[
        "registry", "report", "--store", store, "--format", "json",
    ]));
    assert_eq!(report["verdict"], serde_json::json!("adequate"));
}

#[test]
fn registry_store_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("registry.json");
    let out = run_with_env(
        &["registry", "seed"],
        &[("QKDSECVAL_STORE", store.to_str().unwrap())],
    );
    assert_eq!(exit_code(&out), 0);
    assert!(store.exists());
}

#[test]
fn filtered_report_accepts_layer_and_risk_names() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("registry.json");
    let store = store.to_str().unwrap();
    run(&["registry", "seed", "--store", store]);

    let report = stdout_json(&run(&[
        "registry", "report", "--store", store, "--layer", "q5", "--risk", "low", "--format",
        "json",
    ]));
    let ids: Vec<&str> = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["finite-key-size-effects", "non-quantum-rng"]);
}

#[test]
fn input_errors_exit_one_usage_errors_exit_two() {
    // No configuration where one is needed.
    let out = run(&["keyrate"]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));

    // Nonexistent configuration file.
    let out = run(&["keyrate", "--config", "/nonexistent/run.json"]);
    assert_eq!(exit_code(&out), 1);

    // csv is a registry-report format only.
    let out = run(&["keyrate", "--config", &example_config(), "--format", "csv"]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("registry report"));

    // Missing registry store.
    let out = run(&["registry", "report"]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("QKDSECVAL_STORE"));

    // Seeding a populated store without consent.
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("registry.json");
    let store = store.to_str().unwrap();
    run(&["registry", "seed", "--store", store]);
    let out = run(&["registry", "seed", "--store", store]);
    assert_eq!(exit_code(&out), 1);
    let out = run(&["registry", "seed", "--store", store, "--overwrite"]);
    assert_eq!(exit_code(&out), 0);

    // Unknown record and unknown hardness level.
    let out = run(&[
        "registry", "set", "--store", store, "--id", "no-such-record", "--hardness", "C1",
        "--note", "x",
    ]);
    assert_eq!(exit_code(&out), 1);
    let out = run(&[
        "registry",
        "set",
        "--store",
        store,
        "--id",
        "trojan-horse",
        "--hardness",
        "C9",
        "--note",
        "x",
    ]);
    assert_eq!(exit_code(&out), 1);

    // Command-line misuse is clap's domain and exits 2.
    let out = run(&["frobnicate"]);
    assert_eq!(exit_code(&out), 2);
    let out = run(&["registry", "set", "--store", store]);
    assert_eq!(exit_code(&out), 2, "missing required flags");
}

#[test]
fn splitting_needs_a_configured_line_loss() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_variant(dir.path(), "no_loss.json", |value| {
        value["attack"]
            .as_object_mut()
            .unwrap()
            .remove("line_loss_db");
    });
    let out = run(&["attack", "splitting", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line_loss_db"));
}
