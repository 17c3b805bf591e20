//! The verification battery: thirteen numbered criteria, each comparing a
//! measured quantity against a pinned reference at a pinned tolerance.
//!
//! Criterion 13 is the falsifiability meta-check: perturbing a pinned
//! reference must fail exactly the corresponding criterion. The same
//! perturbation hook is exposed on the command line for manual use.

use std::time::Instant;

use hydrofel_core::constants::{BOLTZMANN, C_A_REFERENCE, C_T_REFERENCE};
use hydrofel_core::diagnostics::{
    conservation_drift_rate, detect_saturation, first_amplitude_crossing, fit_growth_rate,
    TraceRecord,
};
use hydrofel_core::dynamics::{
    init_state, pulse_solution_residual, simulate, step_scaled, step_unscaled, to_physical,
    to_scaled, PhaseInitMode, SimConfig,
};
use hydrofel_core::params::{derive, MediumParams};
use hydrofel_core::sweep::{
    run_sweep, verify_design_constants, SweepAxis, SweepMode, SweepObservable, SweepSpec,
};

/// Scaled-amplitude window for the growth fit of the verification runs. The
/// shot-noise seed of an 8192-particle beam enters the collective mode near
/// 4e-3, so the window starts two decades above the initial field and one
/// and a half above the noise, and ends before the nonlinear bend.
pub const GROWTH_FIT_WINDOW: (f64, f64) = (0.1, 0.5);

/// Seeds of the growth-rate runs; the fitted rate is their mean. A single
/// noise-seeded trajectory carries a few-percent systematic from the two
/// subdominant collective modes beating against the growing one, which
/// averages out across independent noise realizations.
pub const GROWTH_SEEDS: [u64; 6] = [1, 2, 3, 4, 5, 6];

const TOL_THERMAL: f64 = 0.03;
const TOL_LC: f64 = 0.02;
const TOL_DESIGN: f64 = 0.05;
const PAIR_SPREAD_BOUND: f64 = 1e-10;
const TOL_GROWTH: f64 = 0.02;
const TOL_EXPONENT: f64 = 0.02;
const TOL_EXPONENT_INTENSITY: f64 = 0.05;
const RUNTIME_BOUND_MS: f64 = 1.0;

/// Pinned reference values and bounds, one field per criterion knob.
#[derive(Debug, Clone, PartialEq)]
pub struct References {
    pub delta_n: f64,
    pub eps_over_kbt: f64,
    pub l_c: f64,
    pub c_a: f64,
    pub c_t: f64,
    pub growth_rate: f64,
    pub sat_band: (f64, f64),
    pub conservation_bound: f64,
    pub equivalence_bound: f64,
    pub exp_amp_rho: f64,
    pub exp_amp_pz: f64,
    pub exp_gain_rho: f64,
    pub exp_gain_pz: f64,
    pub exp_intensity_n: f64,
    pub pulse_residual_bound: f64,
    pub static_bound: f64,
}

impl References {
    pub fn nominal() -> Self {
        Self {
            delta_n: 3.6,
            eps_over_kbt: 0.12,
            l_c: 63e-6,
            c_a: C_A_REFERENCE,
            c_t: C_T_REFERENCE,
            // real part of the unstable root of lambda^3 = i
            growth_rate: core::f64::consts::FRAC_PI_6.cos(),
            sat_band: (1.0, 2.0),
            conservation_bound: 1e-8,
            equivalence_bound: 1e-6,
            exp_amp_rho: 2.0 / 3.0,
            exp_amp_pz: 1.0 / 3.0,
            exp_gain_rho: -1.0 / 3.0,
            exp_gain_pz: -2.0 / 3.0,
            exp_intensity_n: 4.0 / 3.0,
            pulse_residual_bound: 1e-12,
            static_bound: 1e-12,
        }
    }

    /// Copy with the reference of one criterion (1..=12) knocked off target.
    pub fn perturbed(criterion: u8) -> Self {
        let mut r = Self::nominal();
        match criterion {
            1 => r.delta_n *= 1.10,
            2 => r.eps_over_kbt *= 1.10,
            3 => r.l_c *= 1.10,
            4 => r.c_a *= 1.15,
            5 => r.c_t *= 1.15,
            6 => r.growth_rate *= 1.10,
            7 => r.sat_band = (1.9, 2.0),
            8 => r.conservation_bound *= 1e-9,
            9 => r.equivalence_bound *= 1e-9,
            10 => r.exp_amp_rho += 0.05,
            11 => r.pulse_residual_bound *= 1e-30,
            12 => r.static_bound *= 1e-6,
            _ => {}
        }
        r
    }
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub skipped: bool,
    pub detail: String,
    pub runtime_ms: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let status = if self.skipped {
            "SKIP"
        } else if self.passed {
            "PASS"
        } else {
            "FAIL"
        };
        format!(
            "{:>2} {status}  {:<28} {} ({:.1} ms)",
            self.id, self.name, self.detail, self.runtime_ms
        )
    }
}

#[derive(Debug, Clone)]
pub struct BatteryReport {
    pub results: Vec<CriterionResult>,
}

impl BatteryReport {
    /// True when every executed criterion passed; skips do not count.
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.skipped || r.passed)
    }

    pub fn failed_ids(&self) -> Vec<u8> {
        self.results
            .iter()
            .filter(|r| !r.skipped && !r.passed)
            .map(|r| r.id)
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&r.line());
            out.push('\n');
        }
        let executed = self.results.iter().filter(|r| !r.skipped).count();
        let passed = self
            .results
            .iter()
            .filter(|r| !r.skipped && r.passed)
            .count();
        let skipped = self.results.len() - executed;
        out.push_str(&format!(
            "RESULT: {passed}/{executed} criteria passed, {skipped} skipped\n"
        ));
        out
    }
}

fn rel_dev(measured: f64, expected: f64) -> f64 {
    (measured - expected).abs() / expected.abs()
}

struct Criterion {
    id: u8,
    name: &'static str,
    expensive: bool,
}

type Outcome = (bool, String);

/// Run the battery. `quick` skips the criteria that need particle
/// integrations and marks them skipped.
pub fn run_battery(quick: bool, refs: &References) -> BatteryReport {
    run_battery_inner(quick, refs, true)
}

fn run_battery_inner(quick: bool, refs: &References, with_meta: bool) -> BatteryReport {
    let mut results = Vec::with_capacity(13);
    // shared simulation products for criteria 6, 7, 8
    let mut instability: Option<Result<InstabilityRuns, String>> = None;

    let criteria = [
        Criterion { id: 1, name: "population difference", expensive: false },
        Criterion { id: 2, name: "gap over k_B T", expensive: false },
        Criterion { id: 3, name: "coherence length", expensive: false },
        Criterion { id: 4, name: "design constant c_A", expensive: false },
        Criterion { id: 5, name: "design constant c_t", expensive: false },
        Criterion { id: 6, name: "linear growth rate", expensive: true },
        Criterion { id: 7, name: "saturation peak", expensive: true },
        Criterion { id: 8, name: "conservation drift", expensive: true },
        Criterion { id: 9, name: "scaled/unscaled equivalence", expensive: true },
        Criterion { id: 10, name: "scaling exponents", expensive: true },
        Criterion { id: 11, name: "pulse-family residual", expensive: false },
        Criterion { id: 12, name: "static equilibrium", expensive: true },
        Criterion { id: 13, name: "falsifiability hook", expensive: false },
    ];

    for c in criteria {
        if quick && c.expensive {
            results.push(CriterionResult {
                id: c.id,
                name: c.name,
                passed: false,
                skipped: true,
                detail: "skipped in quick mode (needs a particle integration)".into(),
                runtime_ms: 0.0,
            });
            continue;
        }
        if c.id == 13 && !with_meta {
            results.push(CriterionResult {
                id: c.id,
                name: c.name,
                passed: false,
                skipped: true,
                detail: "not evaluated inside a falsifiability sub-battery".into(),
                runtime_ms: 0.0,
            });
            continue;
        }
        let start = Instant::now();
        if matches!(c.id, 6..=8) && instability.is_none() {
            instability = Some(instability_runs());
        }
        let (passed, detail) = match c.id {
            1 => criterion_delta_n(refs),
            2 => criterion_eps_ratio(refs),
            3 => criterion_coherence_length(refs),
            4 => criterion_c_a(refs),
            5 => criterion_c_t(refs),
            6 => criterion_growth(refs, instability.as_ref().unwrap()),
            7 => criterion_saturation(refs, instability.as_ref().unwrap()),
            8 => criterion_conservation(refs, instability.as_ref().unwrap()),
            9 => criterion_equivalence(refs),
            10 => criterion_exponents(refs),
            11 => criterion_pulse(refs),
            12 => criterion_static(refs),
            13 => criterion_falsifiability(),
            _ => unreachable!(),
        };
        results.push(CriterionResult {
            id: c.id,
            name: c.name,
            passed,
            skipped: false,
            detail,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    BatteryReport { results }
}

fn criterion_delta_n(refs: &References) -> Outcome {
    let start = Instant::now();
    let derived = match derive(&MediumParams::default()) {
        Ok(d) => d.params,
        Err(e) => return (false, format!("derivation failed: {e}")),
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let dev = rel_dev(derived.delta_n, refs.delta_n);
    let passed = dev <= TOL_THERMAL && elapsed_ms < RUNTIME_BOUND_MS;
    (
        passed,
        format!(
            "delta_n={:.4} expected={:.2} dev={:.2}% tol={:.0}% derive={:.3} ms",
            derived.delta_n,
            refs.delta_n,
            100.0 * dev,
            100.0 * TOL_THERMAL,
            elapsed_ms
        ),
    )
}

fn criterion_eps_ratio(refs: &References) -> Outcome {
    let derived = match derive(&MediumParams::default()) {
        Ok(d) => d.params,
        Err(e) => return (false, format!("derivation failed: {e}")),
    };
    let ratio = derived.eps / (BOLTZMANN * 300.0);
    let dev = rel_dev(ratio, refs.eps_over_kbt);
    (
        dev <= TOL_THERMAL,
        format!(
            "eps/(k_B 300K)={ratio:.4} expected={:.2} dev={:.2}% tol={:.0}%",
            refs.eps_over_kbt,
            100.0 * dev,
            100.0 * TOL_THERMAL
        ),
    )
}

fn criterion_coherence_length(refs: &References) -> Outcome {
    let derived = match derive(&MediumParams::default()) {
        Ok(d) => d.params,
        Err(e) => return (false, format!("derivation failed: {e}")),
    };
    let dev = rel_dev(derived.l_c, refs.l_c);
    (
        dev <= TOL_LC,
        format!(
            "l_c={:.3e} m expected={:.3e} m dev={:.2}% tol={:.0}%",
            derived.l_c,
            refs.l_c,
            100.0 * dev,
            100.0 * TOL_LC
        ),
    )
}

fn criterion_c_a(refs: &References) -> Outcome {
    let start = Instant::now();
    let report = match verify_design_constants(30, 300.0) {
        Ok(r) => r,
        Err(e) => return (false, format!("derivation failed: {e}")),
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let dev = rel_dev(report.c_a_eff, refs.c_a);
    let passed = dev <= TOL_DESIGN
        && report.c_a_pair_spread < PAIR_SPREAD_BOUND
        && elapsed_ms < RUNTIME_BOUND_MS;
    (
        passed,
        format!(
            "c_A={:.3e} expected={:.2e} dev={:.2}% tol={:.0}% spread={:.1e} compute={:.3} ms",
            report.c_a_eff,
            refs.c_a,
            100.0 * dev,
            100.0 * TOL_DESIGN,
            report.c_a_pair_spread,
            elapsed_ms
        ),
    )
}

fn criterion_c_t(refs: &References) -> Outcome {
    let report = match verify_design_constants(30, 300.0) {
        Ok(r) => r,
        Err(e) => return (false, format!("derivation failed: {e}")),
    };
    let dev = rel_dev(report.c_t_eff, refs.c_t);
    let passed = dev <= TOL_DESIGN && report.c_t_pair_spread < PAIR_SPREAD_BOUND;
    (
        passed,
        format!(
            "c_t={:.3e} expected={:.2e} dev={:.2}% tol={:.0}% spread={:.1e}",
            report.c_t_eff,
            refs.c_t,
            100.0 * dev,
            100.0 * TOL_DESIGN,
            report.c_t_pair_spread
        ),
    )
}

struct InstabilityRuns {
    /// Trace of the first seed, integrated to tau = 20.
    main_trace: Vec<TraceRecord>,
    /// Fitted growth rate per seed.
    rates: Vec<f64>,
}

/// Cold beam, 8192 particles, uniform-random phases, A0(0) = 1e-6, phi = 0,
/// d_tau = 1e-3. One run per seed; the first doubles as the
/// saturation/conservation run.
fn instability_runs() -> Result<InstabilityRuns, String> {
    let mut rates = Vec::with_capacity(GROWTH_SEEDS.len());
    let mut main_trace = None;
    for (i, &seed) in GROWTH_SEEDS.iter().enumerate() {
        let cfg = SimConfig {
            seed,
            tau_max: if i == 0 { 20.0 } else { 9.0 },
            ..SimConfig::default()
        };
        let run = simulate(&cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        let fit = fit_growth_rate(&run.trace, GROWTH_FIT_WINDOW.0, GROWTH_FIT_WINDOW.1)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        rates.push(fit.rate);
        if i == 0 {
            main_trace = Some(run.trace);
        }
    }
    Ok(InstabilityRuns {
        main_trace: main_trace.expect("at least one seed"),
        rates,
    })
}

fn criterion_growth(refs: &References, runs: &Result<InstabilityRuns, String>) -> Outcome {
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    let mean = runs.rates.iter().sum::<f64>() / runs.rates.len() as f64;
    let dev = rel_dev(mean, refs.growth_rate);
    let (lo, hi) = runs
        .rates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    (
        dev <= TOL_GROWTH,
        format!(
            "rate={mean:.4} (mean of {} seeds, range {lo:.3}..{hi:.3}) expected={:.4} dev={:.2}% tol={:.0}%",
            runs.rates.len(),
            refs.growth_rate,
            100.0 * dev,
            100.0 * TOL_GROWTH
        ),
    )
}

fn criterion_saturation(refs: &References, runs: &Result<InstabilityRuns, String>) -> Outcome {
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    let reached_unity = first_amplitude_crossing(&runs.main_trace, 1.0).is_some();
    match detect_saturation(&runs.main_trace, 0.5) {
        Ok(sat) => {
            let in_band = sat.a_peak >= refs.sat_band.0 && sat.a_peak <= refs.sat_band.1;
            (
                reached_unity && in_band,
                format!(
                    "A_peak={:.4} at tau={:.2}, band=[{}, {}], reached A0>=1: {reached_unity}",
                    sat.a_peak, sat.tau_sat, refs.sat_band.0, refs.sat_band.1
                ),
            )
        }
        Err(e) => (false, format!("{e}")),
    }
}

fn criterion_conservation(refs: &References, runs: &Result<InstabilityRuns, String>) -> Outcome {
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    let c0 = runs.main_trace[0].conserved_c;
    let bound = refs.conservation_bound * c0.abs().max(1.0);
    let drift = conservation_drift_rate(&runs.main_trace);
    (
        drift < bound,
        format!("|dC|/dtau={drift:.2e} bound={bound:.1e} over tau in [0, 20]"),
    )
}

fn criterion_equivalence(refs: &References) -> Outcome {
    let dp = match derive(&MediumParams::default()) {
        Ok(d) => d.params,
        Err(e) => return (false, format!("derivation failed: {e}")),
    };
    let cfg = SimConfig {
        n_particles: 256,
        tau_max: 5.0,
        seed: 1,
        ..SimConfig::default()
    };
    let mut scaled = match init_state(&cfg) {
        Ok(s) => s,
        Err(e) => return (false, format!("{e}")),
    };
    let mut phys = to_physical(&scaled, &dp);
    let dt_phys = cfg.d_tau * dp.t_scale;
    let chunk = 100;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        if let Err(e) = step_scaled(&mut scaled, cfg.d_tau, chunk) {
            return (false, format!("scaled route: {e}"));
        }
        if let Err(e) = step_unscaled(&mut phys, &dp, dt_phys, chunk) {
            return (false, format!("physical route: {e}"));
        }
        let back = to_scaled(&phys, &dp);
        for (a, b) in back.theta.iter().zip(&scaled.theta) {
            worst = worst.max((a - b).abs());
        }
    }
    (
        worst < refs.equivalence_bound,
        format!(
            "max|dtheta|={worst:.2e} bound={:.0e} over tau in [0, 5]",
            refs.equivalence_bound
        ),
    )
}

fn criterion_exponents(refs: &References) -> Outcome {
    fn decade(center: f64) -> Vec<f64> {
        (0..5)
            .map(|k| center * 10.0f64.powf(k as f64 / 4.0 - 0.5))
            .collect()
    }
    let sim = SimConfig {
        n_particles: 1024,
        tau_max: 15.0,
        seed: 2,
        ..SimConfig::default()
    };
    let cases: [(&str, SweepAxis, f64, SweepObservable, f64, f64); 5] = [
        ("A_sat~rho", SweepAxis::Rho, 6.022e23, SweepObservable::SatAmplitudePhysical, refs.exp_amp_rho, TOL_EXPONENT),
        ("A_sat~E0z", SweepAxis::E0z, 1.0e6, SweepObservable::SatAmplitudePhysical, refs.exp_amp_pz, TOL_EXPONENT),
        ("t_gain~rho", SweepAxis::Rho, 6.022e23, SweepObservable::GainTimePhysical, refs.exp_gain_rho, TOL_EXPONENT),
        ("t_gain~E0z", SweepAxis::E0z, 1.0e6, SweepObservable::GainTimePhysical, refs.exp_gain_pz, TOL_EXPONENT),
        ("I_sat~N", SweepAxis::NIons, 6.022e17, SweepObservable::SatIntensityPhysical, refs.exp_intensity_n, TOL_EXPONENT_INTENSITY),
    ];
    let mut all_ok = true;
    let mut parts = Vec::new();
    for (label, axis, center, observable, expected, tol) in cases {
        let mut spec = SweepSpec::new(axis, decade(center), observable);
        spec.sim = sim.clone();
        spec.mode = SweepMode::PerRow;
        match run_sweep(&spec) {
            Ok(result) => match result.fit {
                Some(fit) => {
                    let ok = (fit.exponent - expected).abs() <= tol;
                    all_ok &= ok;
                    parts.push(format!(
                        "{label}={:.4} ({expected:+.3}+-{tol}){}",
                        fit.exponent,
                        if ok { "" } else { " FAIL" }
                    ));
                }
                None => {
                    all_ok = false;
                    parts.push(format!("{label}: no fit (too few successful rows)"));
                }
            },
            Err(e) => {
                all_ok = false;
                parts.push(format!("{label}: {e}"));
            }
        }
    }
    (all_ok, parts.join(", "))
}

fn criterion_pulse(refs: &References) -> Outcome {
    let dp = match derive(&MediumParams::default()) {
        Ok(d) => d.params,
        Err(e) => return (false, format!("derivation failed: {e}")),
    };
    let mut worst = 0.0f64;
    for &theta0 in &[0.0, 0.3, 2.7, -1.2] {
        for &k in &[0, 1, 5, -3] {
            for &t in &[0.0, 1.0e-12, 1.0] {
                let r = pulse_solution_residual(theta0, k, t, dp.a_scale, &dp).abs();
                worst = worst.max(r);
            }
        }
    }
    (
        worst < refs.pulse_residual_bound,
        format!(
            "max|residual|={worst:.2e} bound={:.0e} over the pulse family",
            refs.pulse_residual_bound
        ),
    )
}

fn criterion_static(refs: &References) -> Outcome {
    let cfg = SimConfig {
        n_particles: 64,
        a0_init: 0.0,
        phase_init: PhaseInitMode::UniformGrid,
        tau_max: 10.0,
        ..SimConfig::default()
    };
    let s0 = match init_state(&cfg) {
        Ok(s) => s,
        Err(e) => return (false, format!("{e}")),
    };
    let mut s = s0.clone();
    if let Err(e) = step_scaled(&mut s, cfg.d_tau, cfg.n_steps()) {
        return (false, format!("{e}"));
    }
    let mut worst = s.a0();
    for (a, b) in s.theta.iter().zip(&s0.theta) {
        worst = worst.max((a - b).abs());
    }
    for p in &s.p {
        worst = worst.max(p.abs());
    }
    (
        worst < refs.static_bound,
        format!(
            "max deviation={worst:.2e} bound={:.0e} over tau in [0, 10]",
            refs.static_bound
        ),
    )
}

/// Perturb the reference of a cheap criterion and confirm that exactly that
/// criterion fails in a quick sub-battery.
fn criterion_falsifiability() -> Outcome {
    let target = 4u8;
    let sub = run_battery_inner(true, &References::perturbed(target), false);
    let failed = sub.failed_ids();
    let pattern_ok = failed == vec![target];
    (
        pattern_ok,
        format!(
            "perturbing the criterion-{target} reference fails exactly {{{}}}",
            failed
                .iter()
                .map(|id| id.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
    )
}
