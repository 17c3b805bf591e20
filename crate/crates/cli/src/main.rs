//! `hydrofel` — deterministic simulator and design calculator for the
//! collective photon/solvation-water instability.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 runtime divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hydrofel_cli::config::FileConfig;
use hydrofel_cli::output::{self, Manifest, RunSummary, SweepFitReport};
use hydrofel_cli::verify::{run_battery, References};
use hydrofel_core::diagnostics::{
    conservation_drift_rate, detect_saturation, first_amplitude_crossing, fit_growth_rate,
};
use hydrofel_core::dynamics::{init_state, run_scaled, DynamicsError};
use hydrofel_core::params::derive;
use hydrofel_core::sweep::{run_sweep, SweepError};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

/// Environment variable overriding the default output directory.
const OUT_DIR_ENV: &str = "HYDROFEL_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "hydrofel",
    version,
    about = "Deterministic simulator for a collective radiation instability of ion-solvated water"
)]
struct Cli {
    /// TOML config file; built-in reference scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $HYDROFEL_OUT, then ./hydrofel-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the simulation seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every derived parameter and design prediction for the scenario.
    Constants,
    /// Integrate the scaled system and write trace, summary and manifest.
    Simulate,
    /// Run the [sweep] section and write the table and fit files.
    Sweep,
    /// Run the verification battery.
    Verify {
        /// Skip the criteria that need particle integrations.
        #[arg(long)]
        quick: bool,
        /// Test hook: perturb the pinned reference of one criterion (1-12)
        /// and watch exactly that criterion fail.
        #[arg(long, value_name = "CRITERION")]
        perturb: Option<u8>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Constants => cmd_constants(cli, &cfg),
        Command::Simulate => cmd_simulate(cli, &cfg),
        Command::Sweep => cmd_sweep(cli, &cfg),
        Command::Verify { quick, perturb } => cmd_verify(cli, *quick, *perturb),
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("hydrofel-out"))
}

#[derive(Debug, Serialize)]
struct ConstantsReport {
    hydration_n: u32,
    temperature_k: f64,
    rho_per_m3: f64,
    p_z: f64,
    delta_n: f64,
    l_c_m: f64,
    omega_c_rad_per_s: f64,
    eps_j: f64,
    eps_over_kb_t: f64,
    d0_c_m: f64,
    d0_tilde_c_m: f64,
    i_w_kg_m2: f64,
    alpha_si: f64,
    beta_si: f64,
    a_scale_v_s_per_m: f64,
    t_scale_s: f64,
    a_sat_physical_v_s_per_m: f64,
    t_gain_s: f64,
    c_a_eff: f64,
    c_t_eff: f64,
}

impl ConstantsReport {
    fn kv_pairs(&self) -> Vec<(&'static str, String)> {
        let f = output::format_float;
        vec![
            ("hydration_n", self.hydration_n.to_string()),
            ("temperature_K", f(self.temperature_k)),
            ("rho_per_m3", f(self.rho_per_m3)),
            ("P_z", f(self.p_z)),
            ("delta_n", f(self.delta_n)),
            ("l_c_m", f(self.l_c_m)),
            ("omega_c_rad_per_s", f(self.omega_c_rad_per_s)),
            ("eps_J", f(self.eps_j)),
            ("eps_over_kB_T", f(self.eps_over_kb_t)),
            ("d0_C_m", f(self.d0_c_m)),
            ("d0_tilde_C_m", f(self.d0_tilde_c_m)),
            ("I_w_kg_m2", f(self.i_w_kg_m2)),
            ("alpha_SI", f(self.alpha_si)),
            ("beta_SI", f(self.beta_si)),
            ("a_scale_V_s_per_m", f(self.a_scale_v_s_per_m)),
            ("t_scale_s", f(self.t_scale_s)),
            ("A_sat_physical_V_s_per_m", f(self.a_sat_physical_v_s_per_m)),
            ("t_gain_s", f(self.t_gain_s)),
            ("c_A_eff", f(self.c_a_eff)),
            ("c_t_eff", f(self.c_t_eff)),
        ]
    }
}

fn cmd_constants(cli: &Cli, cfg: &FileConfig) -> Result<u8> {
    let medium = cfg.medium_params();
    let derivation = derive(&medium).context("invalid scenario")?;
    for w in &derivation.warnings {
        eprintln!("warning: {w}");
    }
    let p = derivation.params;
    let rho_cbrt = medium.rho.cbrt();
    let pz_cbrt = p.p_z.cbrt();
    let report = ConstantsReport {
        hydration_n: medium.n,
        temperature_k: medium.temperature,
        rho_per_m3: medium.rho,
        p_z: p.p_z,
        delta_n: p.delta_n,
        l_c_m: p.l_c,
        omega_c_rad_per_s: p.omega_c,
        eps_j: p.eps,
        eps_over_kb_t: p.eps / (hydrofel_core::constants::BOLTZMANN * medium.temperature),
        d0_c_m: p.d0,
        d0_tilde_c_m: p.d0_tilde,
        i_w_kg_m2: p.i_w,
        alpha_si: p.alpha,
        beta_si: p.beta,
        a_scale_v_s_per_m: p.a_scale,
        t_scale_s: p.t_scale,
        a_sat_physical_v_s_per_m: p.a_scale,
        t_gain_s: p.t_scale,
        c_a_eff: p.a_scale / (rho_cbrt * rho_cbrt * pz_cbrt),
        c_t_eff: p.t_scale * rho_cbrt * pz_cbrt * pz_cbrt,
    };
    match cli.format {
        Format::Text => print!("{}", output::render_kv_table(&report.kv_pairs())),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        Format::Csv => {
            println!("key,value");
            for (k, v) in report.kv_pairs() {
                println!("{k},{v}");
            }
        }
    }
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
        output::write_json(&dir.join("constants.json"), &report)?;
    }
    Ok(0)
}

fn apply_seed(cfg: &FileConfig, seed: Option<u64>) -> FileConfig {
    let mut cfg = cfg.clone();
    if let Some(seed) = seed {
        cfg.sim.seed = seed;
    }
    cfg
}

fn cmd_simulate(cli: &Cli, cfg: &FileConfig) -> Result<u8> {
    let cfg = apply_seed(cfg, cli.seed);
    let medium = cfg.medium_params();
    let derivation = derive(&medium).context("invalid scenario")?;
    for w in &derivation.warnings {
        eprintln!("warning: {w}");
    }
    let sim = cfg.sim_config();
    sim.validate().context("invalid [sim] section")?;

    let dir = out_dir(cli);
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let started = output::unix_ms();
    let mut state = init_state(&sim)?;
    let mut trace = Vec::with_capacity(sim.n_steps() / sim.record_stride + 2);
    let run_result = run_scaled(&mut state, sim.d_tau, sim.n_steps(), sim.record_stride, |r| {
        trace.push(r.clone())
    });

    let diverged = match &run_result {
        Ok(()) => None,
        Err(DynamicsError::Diverged {
            step,
            t_last_good,
            last_record,
        }) => {
            trace.push(last_record.clone());
            Some(format!("diverged at step {step} (tau = {t_last_good:.6})"))
        }
        Err(other) => return Err(anyhow::anyhow!(other.clone())),
    };
    let status = diverged.clone().unwrap_or_else(|| "ok".to_string());

    let window = (cfg.sim.growth_fit_lo, cfg.sim.growth_fit_hi);
    let growth = fit_growth_rate(&trace, window.0, window.1).ok();
    let sat = detect_saturation(&trace, cfg.sim.saturation_threshold).ok();
    let summary = RunSummary {
        status: status.clone(),
        n_records: trace.len(),
        growth_rate: growth.as_ref().map(|g| g.rate),
        growth_window: window,
        growth_fit_points: growth.as_ref().map(|g| g.n_points),
        tau_sat: sat.as_ref().map(|s| s.tau_sat),
        a_peak_scaled: sat.as_ref().map(|s| s.a_peak),
        tau_first_unity: first_amplitude_crossing(&trace, 1.0),
        conservation_drift_rate: conservation_drift_rate(&trace),
        final_tau: state.tau,
        final_a0_scaled: state.a0(),
        final_phi: state.phi(),
    };

    output::write_trace_csv(&dir.join("trace.csv"), &trace)?;
    output::write_json(&dir.join("summary.json"), &summary)?;
    output::write_phase_histogram(&dir.join("phase_hist.csv"), &state, 64, 64)?;
    let manifest = Manifest {
        tool: "hydrofel",
        version: env!("CARGO_PKG_VERSION"),
        command: "simulate".into(),
        seed: sim.seed,
        started_unix_ms: started,
        finished_unix_ms: output::unix_ms(),
        status: status.clone(),
        config: cfg.clone(),
    };
    output::write_json(&dir.join("manifest.json"), &manifest)?;

    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&summary)?),
        Format::Text | Format::Csv => {
            let fmt_opt = |v: Option<f64>| {
                v.map(output::format_float).unwrap_or_else(|| "-".into())
            };
            let pairs = vec![
                ("status", status.clone()),
                ("records", summary.n_records.to_string()),
                ("growth_rate", fmt_opt(summary.growth_rate)),
                ("tau_sat", fmt_opt(summary.tau_sat)),
                ("A_peak_scaled", fmt_opt(summary.a_peak_scaled)),
                ("tau_first_unity", fmt_opt(summary.tau_first_unity)),
                (
                    "conservation_drift_rate",
                    output::format_float(summary.conservation_drift_rate),
                ),
                ("out_dir", dir.display().to_string()),
            ];
            print!("{}", output::render_kv_table(&pairs));
        }
    }
    if diverged.is_some() {
        eprintln!("error: integration diverged; partial trace written to {}", dir.display());
        return Ok(EXIT_DIVERGED);
    }
    Ok(0)
}

fn cmd_sweep(cli: &Cli, cfg: &FileConfig) -> Result<u8> {
    let cfg = apply_seed(cfg, cli.seed);
    let spec = cfg.sweep_spec()?;
    let dir = out_dir(cli);
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let started = output::unix_ms();
    let result = match run_sweep(&spec) {
        Ok(r) => r,
        Err(err @ (SweepError::TooFewValues { .. }
        | SweepError::BadValues
        | SweepError::NonIntegralHydration
        | SweepError::Config(_))) => {
            return Err(anyhow::anyhow!(err).context("invalid [sweep] section"));
        }
    };
    for row in &result.rows {
        if let Err(e) = &row.outcome {
            eprintln!("warning: row {:e} failed: {e}", row.axis_value);
        }
    }

    output::write_sweep_csv(&dir.join("sweep.csv"), &result)?;
    let fit_report = SweepFitReport::from_result(&result);
    output::write_json(&dir.join("fit.json"), &fit_report)?;
    let manifest = Manifest {
        tool: "hydrofel",
        version: env!("CARGO_PKG_VERSION"),
        command: "sweep".into(),
        seed: spec.sim.seed,
        started_unix_ms: started,
        finished_unix_ms: output::unix_ms(),
        status: "ok".into(),
        config: cfg.clone(),
    };
    output::write_json(&dir.join("manifest.json"), &manifest)?;

    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&fit_report)?),
        Format::Csv => print!("{}", std::fs::read_to_string(dir.join("sweep.csv"))?),
        Format::Text => {
            let mut pairs: Vec<(&str, String)> = vec![
                ("rows", result.rows.len().to_string()),
                (
                    "rows_failed",
                    result
                        .rows
                        .iter()
                        .filter(|r| r.outcome.is_err())
                        .count()
                        .to_string(),
                ),
            ];
            match &result.fit {
                Some(fit) => {
                    pairs.push(("fit_exponent", output::format_float(fit.exponent)));
                    pairs.push(("fit_prefactor", output::format_float(fit.prefactor)));
                    pairs.push(("fit_r_squared", output::format_float(fit.r_squared)));
                }
                None => pairs.push(("fit", "unavailable (fewer than 3 successful rows)".into())),
            }
            pairs.push(("out_dir", dir.display().to_string()));
            print!("{}", output::render_kv_table(&pairs));
        }
    }
    Ok(0)
}

fn cmd_verify(cli: &Cli, quick: bool, perturb: Option<u8>) -> Result<u8> {
    let refs = match perturb {
        None => References::nominal(),
        Some(id @ 1..=12) => {
            eprintln!("note: running with the criterion-{id} reference perturbed");
            References::perturbed(id)
        }
        Some(other) => anyhow::bail!("--perturb expects a criterion number in 1..=12, got {other}"),
    };
    let report = run_battery(quick, &refs);
    match cli.format {
        Format::Text => print!("{}", report.render()),
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                id: u8,
                name: &'a str,
                status: &'a str,
                detail: &'a str,
                runtime_ms: f64,
            }
            #[derive(Serialize)]
            struct Out<'a> {
                all_passed: bool,
                criteria: Vec<Row<'a>>,
            }
            let out = Out {
                all_passed: report.all_passed(),
                criteria: report
                    .results
                    .iter()
                    .map(|r| Row {
                        id: r.id,
                        name: r.name,
                        status: if r.skipped {
                            "skipped"
                        } else if r.passed {
                            "pass"
                        } else {
                            "fail"
                        },
                        detail: &r.detail,
                        runtime_ms: r.runtime_ms,
                    })
                    .collect(),
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Format::Csv => {
            println!("id,name,status,runtime_ms");
            for r in &report.results {
                let status = if r.skipped {
                    "skipped"
                } else if r.passed {
                    "pass"
                } else {
                    "fail"
                };
                println!("{},{},{status},{}", r.id, r.name, r.runtime_ms);
            }
        }
    }
    Ok(if report.all_passed() { 0 } else { EXIT_VERIFY_FAILED })
}
