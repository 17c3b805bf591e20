//! End-to-end tests of the `hydrofel` binary: exit codes, file formats and
//! reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hydrofel"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir()
        .join("hydrofel-cli-tests")
        .join(format!("{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

/// A small scenario that saturates in a couple of seconds of wall time.
const SMALL_RUN: &str = r#"
[medium]
hydration_n = 30
temperature_k = 300.0
rho_per_m3 = 6.022e23
e0z_v_per_m = 1.0e6

[sim]
n_particles = 256
seed = 11
tau_max = 14.0
growth_fit_lo = 0.05
growth_fit_hi = 0.5
"#;

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn constants_reports_reference_values() {
    let out = bin().arg("constants").output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("delta_n"), "{text}");
    assert!(text.contains("3.6457"), "{text}");
    assert!(text.contains("6.2500000000000001e-5"), "{text}");
}

#[test]
fn constants_json_is_machine_readable() {
    let out = bin().args(["constants", "--format", "json"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let delta_n = v["delta_n"].as_f64().unwrap();
    assert!((delta_n - 3.6457).abs() < 1e-3);
    assert!((v["l_c_m"].as_f64().unwrap() - 62.5e-6).abs() < 1e-12);
}

#[test]
fn missing_key_exits_two_and_names_it() {
    let dir = temp_dir("missing-key");
    let cfg = write_config(
        &dir,
        r#"
        [medium]
        hydration_n = 30
        rho_per_m3 = 6.022e23
        e0z_v_per_m = 1.0e6
        "#,
    );
    let out = bin()
        .args(["constants", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("temperature_k"), "{}", stderr(&out));
}

#[test]
fn simulate_writes_trace_summary_manifest() {
    let dir = temp_dir("simulate");
    let cfg = write_config(&dir, SMALL_RUN);
    let out_dir = dir.join("out");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("tau,A0,phi,b_re,b_im,mean_p,conserved_C\n"));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["status"], "ok");
    // growth at roughly the collective scale; the precise rate criterion
    // runs on the full-size configuration in the acceptance suite
    let rate = summary["growth_rate"].as_f64().unwrap();
    assert!((0.4..=1.3).contains(&rate), "rate {rate}");
    assert!(summary["a_peak_scaled"].as_f64().unwrap() > 1.0);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["tool"], "hydrofel");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config"]["sim"]["n_particles"], 256);
    assert_eq!(manifest["status"], "ok");

    // final-state phase-space histogram: all particles binned
    let hist = std::fs::read_to_string(out_dir.join("phase_hist.csv")).unwrap();
    assert!(hist.starts_with("theta_center,p_center,count\n"));
    let total: u64 = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 256);
}

#[test]
fn default_run_summary_matches_the_collective_rate() {
    // the full-size default takes a while; checked here once through the
    // binary with the default seed
    let dir = temp_dir("default-run");
    let out = bin()
        .args(["simulate", "--format", "json", "--out"])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rate = summary["growth_rate"].as_f64().unwrap();
    let expected = 3.0f64.sqrt() / 2.0;
    assert!(
        (rate - expected).abs() / expected < 0.02,
        "default-run growth rate {rate}"
    );
    let peak = summary["a_peak_scaled"].as_f64().unwrap();
    assert!((1.0..=2.0).contains(&peak), "peak {peak}");
}

#[test]
fn simulate_reruns_byte_identically() {
    let dir = temp_dir("rerun");
    let cfg = write_config(&dir, SMALL_RUN);
    for sub in ["a", "b"] {
        let out = bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.join(sub))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = std::fs::read(dir.join("a/trace.csv")).unwrap();
    let b = std::fs::read(dir.join("b/trace.csv")).unwrap();
    assert_eq!(a, b);
    // a different seed produces a different trace
    let out = bin()
        .args(["simulate", "--seed", "99", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("c"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let c = std::fs::read(dir.join("c/trace.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn zero_field_grid_trace_is_static() {
    let dir = temp_dir("static");
    let cfg = write_config(
        &dir,
        r#"
        [medium]
        hydration_n = 30
        temperature_k = 300.0
        rho_per_m3 = 6.022e23
        e0z_v_per_m = 1.0e6

        [sim]
        n_particles = 64
        a0_init = 0.0
        phase_init = "uniform-grid"
        tau_max = 5.0
        "#,
    );
    let out_dir = dir.join("out");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let rows: Vec<Vec<f64>> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 100);
    // amplitude, bunching, momentum and the conserved combination stay at
    // their initial values to machine precision; the phase column (2) of a
    // zero-amplitude field carries no information and is skipped
    let first = &rows[0];
    for row in &rows {
        for col in [1usize, 3, 4, 5, 6] {
            assert!(
                (row[col] - first[col]).abs() < 1e-12,
                "column {col} drifted to {} at tau {}",
                row[col],
                row[0]
            );
        }
    }
}

#[test]
fn sweep_fits_the_concentration_exponent() {
    let dir = temp_dir("sweep");
    let cfg = write_config(
        &dir,
        r#"
        [medium]
        hydration_n = 30
        temperature_k = 300.0
        rho_per_m3 = 6.022e23
        e0z_v_per_m = 1.0e6

        [sim]
        n_particles = 256
        seed = 11
        tau_max = 14.0

        [sweep]
        axis = "rho"
        values = [1.9e23, 6.022e23, 1.9e24]
        observable = "sat_amplitude_physical"
        mode = "shared-scaled-run"
        "#,
    );
    let out_dir = dir.join("out");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let table = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(table.starts_with("axis_value,observable,tau_sat,A_peak,growth_rate\n"));
    assert_eq!(table.lines().count(), 4);
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("fit.json")).unwrap()).unwrap();
    let exponent = fit["exponent"].as_f64().unwrap();
    assert!((exponent - 2.0 / 3.0).abs() < 1e-3, "exponent {exponent}");
}

#[test]
fn sweep_with_too_few_values_exits_two() {
    let dir = temp_dir("sweep-short");
    let cfg = write_config(
        &dir,
        r#"
        [medium]
        hydration_n = 30
        temperature_k = 300.0
        rho_per_m3 = 6.022e23
        e0z_v_per_m = 1.0e6

        [sweep]
        axis = "rho"
        values = [6.022e23]
        observable = "sat_amplitude_physical"
        "#,
    );
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at least 3"), "{}", stderr(&out));
}

#[test]
fn divergence_exits_three_with_partial_trace() {
    let dir = temp_dir("diverge");
    // an absurd step size overflows the phases within the first step
    let cfg = write_config(
        &dir,
        r#"
        [medium]
        hydration_n = 30
        temperature_k = 300.0
        rho_per_m3 = 6.022e23
        e0z_v_per_m = 1.0e6

        [sim]
        n_particles = 8
        a0_init = 1.0
        d_tau = 1.0e200
        tau_max = 1.0e203
        "#,
    );
    let out_dir = dir.join("out");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert!(
        manifest["status"].as_str().unwrap().contains("diverged"),
        "{manifest}"
    );
    // the partial trace ends on a finite state
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let last = trace.lines().last().unwrap();
    for v in last.split(',') {
        assert!(v.parse::<f64>().unwrap().is_finite(), "{last}");
    }
}

#[test]
fn sweep_flags_failed_rows_and_completes() {
    let dir = temp_dir("sweep-flag");
    // the last field value pushes P_z above one and fails only that row
    let cfg = write_config(
        &dir,
        r#"
        [medium]
        hydration_n = 30
        temperature_k = 300.0
        rho_per_m3 = 6.022e23
        e0z_v_per_m = 1.0e6

        [sim]
        n_particles = 256
        seed = 11
        tau_max = 14.0

        [sweep]
        axis = "e0z"
        values = [1.0e6, 2.0e6, 4.0e6, 2.0e8]
        observable = "sat_amplitude_physical"
        mode = "shared-scaled-run"
        "#,
    );
    let out_dir = dir.join("out");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("failed"), "{}", stderr(&out));
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("fit.json")).unwrap()).unwrap();
    let rows = fit["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["status"], "ok");
    assert!(rows[3]["status"].as_str().unwrap().starts_with("failed"));
    // the fit is still produced from the three healthy rows
    assert!((fit["exponent"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-3);
}

#[test]
fn verify_quick_passes_and_perturbation_fails() {
    let out = bin().args(["verify", "--quick"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("RESULT:"));

    let out = bin()
        .args(["verify", "--quick", "--perturb", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    let fails: Vec<&str> = text.lines().filter(|l| l.contains("FAIL")).collect();
    assert_eq!(fails.len(), 1, "{text}");
    assert!(fails[0].contains("design constant c_A"), "{text}");

    // out-of-range perturbation target is a usage error
    let out = bin()
        .args(["verify", "--quick", "--perturb", "13"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // machine-readable report
    let out = bin()
        .args(["verify", "--quick", "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 13);
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = temp_dir("env-out");
    let cfg = write_config(&dir, SMALL_RUN);
    let out_dir = dir.join("from-env");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .env("HYDROFEL_OUT", &out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("trace.csv").exists());
}
