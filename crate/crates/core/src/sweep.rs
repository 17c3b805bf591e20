//! Parameter-grid execution and scaling-law verification.
//!
//! The scaled dynamics contain no parameters at all, so a sweep only changes
//! the scale factors mapping one scaled run onto physical observables. Both
//! execution modes exploit or exercise that fact: `SharedScaledRun` integrates
//! once and rescales, `PerRow` re-integrates the identical scaled system for
//! every row.

use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::float::FloatExt;

use crate::constants::{C_A_REFERENCE, C_T_REFERENCE};
use crate::diagnostics::{
    detect_saturation, first_amplitude_crossing, fit_growth_rate, fit_power_law, DiagnosticsError,
    PowerLawFit,
};
use crate::dynamics::{simulate, DynamicsError, SimConfig};
use crate::params::{self, design_formulas, MediumParams, ParamsError};

/// Default scaled-amplitude window for the per-row growth diagnostic; sits
/// above the shot-noise seed of runs with a few thousand particles.
pub const DEFAULT_SWEEP_GROWTH_WINDOW: (f64, f64) = (0.05, 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Ion concentration (m⁻³); the ion count follows at fixed volume.
    Rho,
    /// Static field (V/m), hence the polarization fraction.
    E0z,
    /// Ion count at fixed volume; the concentration follows.
    NIons,
    /// Temperature (K).
    Temperature,
    /// Hydration number (integral values).
    Hydration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepObservable {
    /// Physical field amplitude at the saturation peak, a_scale · A_peak.
    SatAmplitudePhysical,
    /// Physical time for the scaled amplitude to first reach one,
    /// t_scale · tau(A0 = 1).
    GainTimePhysical,
    /// Square of the saturated physical amplitude.
    SatIntensityPhysical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Integrate the scaled system afresh for every row.
    PerRow,
    /// Integrate once and rescale per row.
    SharedScaledRun,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Strictly positive, strictly ascending, at least three values.
    pub values: Vec<f64>,
    pub base: MediumParams,
    pub sim: SimConfig,
    pub observable: SweepObservable,
    pub mode: SweepMode,
    /// Amplitude window for the per-row growth-rate diagnostic.
    pub growth_window: (f64, f64),
    pub saturation_threshold: f64,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, values: Vec<f64>, observable: SweepObservable) -> Self {
        Self {
            axis,
            values,
            base: MediumParams::default(),
            sim: SimConfig::default(),
            observable,
            mode: SweepMode::PerRow,
            growth_window: DEFAULT_SWEEP_GROWTH_WINDOW,
            saturation_threshold: crate::diagnostics::DEFAULT_SATURATION_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("sweep needs at least 3 axis values, got {got}")]
    TooFewValues { got: usize },
    #[error("axis values must be strictly positive, finite and strictly ascending")]
    BadValues,
    #[error("hydration axis values must be integral and at least 1")]
    NonIntegralHydration,
    #[error(transparent)]
    Config(#[from] DynamicsError),
}

/// Failure of one row; the sweep itself continues.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepRowError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("scaled amplitude never reached one; gain time undefined")]
    GainUndefined,
}

/// Successful observables of one row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRowData {
    /// The requested physical observable.
    pub observable: f64,
    /// Scaled time of the saturation peak.
    pub tau_sat: f64,
    pub a_peak_scaled: f64,
    /// Growth rate over the spec's window, when the fit succeeds.
    pub growth_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub outcome: Result<SweepRowData, SweepRowError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// One row per axis value, keyed by and ordered as the input values.
    pub rows: Vec<SweepRow>,
    /// Power law across successful rows; present when at least three rows
    /// succeeded.
    pub fit: Option<PowerLawFit>,
}

/// Scaled-run observables shared by every observable definition.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ScaledStats {
    tau_sat: f64,
    a_peak: f64,
    tau_first_unity: Option<f64>,
    growth_rate: Option<f64>,
}

fn scaled_stats(spec: &SweepSpec) -> Result<ScaledStats, SweepRowError> {
    let run = simulate(&spec.sim)?;
    let sat = detect_saturation(&run.trace, spec.saturation_threshold)?;
    Ok(ScaledStats {
        tau_sat: sat.tau_sat,
        a_peak: sat.a_peak,
        tau_first_unity: first_amplitude_crossing(&run.trace, 1.0),
        growth_rate: fit_growth_rate(&run.trace, spec.growth_window.0, spec.growth_window.1)
            .ok()
            .map(|f| f.rate),
    })
}

fn medium_for(base: &MediumParams, axis: SweepAxis, value: f64) -> Result<MediumParams, SweepRowError> {
    let mut m = base.clone();
    match axis {
        SweepAxis::Rho => {
            m.rho = value;
            m.n_ions = value * m.volume;
        }
        SweepAxis::NIons => {
            m.n_ions = value;
            m.rho = value / m.volume;
        }
        SweepAxis::E0z => {
            m.e0z = Some(value);
            m.pz_override = None;
        }
        SweepAxis::Temperature => m.temperature = value,
        SweepAxis::Hydration => {
            // validated integral in run_sweep
            m.n = value as u32;
        }
    }
    Ok(m)
}

fn row_data(
    spec: &SweepSpec,
    stats: ScaledStats,
    value: f64,
) -> Result<SweepRowData, SweepRowError> {
    let medium = medium_for(&spec.base, spec.axis, value)?;
    let derived = params::derive(&medium)?.params;
    let observable = match spec.observable {
        SweepObservable::SatAmplitudePhysical => derived.a_scale * stats.a_peak,
        SweepObservable::SatIntensityPhysical => {
            let a = derived.a_scale * stats.a_peak;
            a * a
        }
        SweepObservable::GainTimePhysical => {
            let tau1 = stats.tau_first_unity.ok_or(SweepRowError::GainUndefined)?;
            derived.t_scale * tau1
        }
    };
    Ok(SweepRowData {
        observable,
        tau_sat: stats.tau_sat,
        a_peak_scaled: stats.a_peak,
        growth_rate: stats.growth_rate,
    })
}

/// Execute a sweep: derive parameters per axis value, obtain the scaled-run
/// observables (shared or per row), rescale to physical units and fit a power
/// law across the successful rows. Row failures are recorded in place and do
/// not abort the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    if spec.values.len() < 3 {
        return Err(SweepError::TooFewValues {
            got: spec.values.len(),
        });
    }
    let ascending = spec
        .values
        .windows(2)
        .all(|w| w[0] < w[1] && w[0].is_finite());
    if !ascending || spec.values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(SweepError::BadValues);
    }
    if spec.axis == SweepAxis::Hydration {
        let integral = spec
            .values
            .iter()
            .all(|&v| v >= 1.0 && (v - v.round()).abs() < 1e-9);
        if !integral {
            return Err(SweepError::NonIntegralHydration);
        }
    }
    spec.sim.validate()?;

    let shared = match spec.mode {
        SweepMode::SharedScaledRun => Some(scaled_stats(spec)),
        SweepMode::PerRow => None,
    };

    let mut rows = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let stats = match &shared {
            Some(s) => s.clone(),
            None => scaled_stats(spec),
        };
        let outcome = stats.and_then(|st| row_data(spec, st, value));
        rows.push(SweepRow {
            axis_value: value,
            outcome,
        });
    }

    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|d| (r.axis_value, d.observable)))
        .collect();
    let fit = fit_power_law(&points).ok();
    Ok(SweepResult { rows, fit })
}

/// Report of the closed-form design-constant verification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignConstantsReport {
    pub c_a_eff: f64,
    pub c_t_eff: f64,
    pub c_a_reference: f64,
    pub c_t_reference: f64,
    /// |c_a_eff − reference| / reference.
    pub c_a_rel_dev: f64,
    pub c_t_rel_dev: f64,
    /// Relative spread of c_a_eff across two unrelated (ρ, P_z) probes;
    /// must vanish because the factored coefficients are scenario-free.
    pub c_a_pair_spread: f64,
    pub c_t_pair_spread: f64,
}

/// Recompute the factored design constants at two unrelated (ρ, P_z) pairs,
/// confirm they agree, and report the deviation from the two-significant-
/// figure reference values.
pub fn verify_design_constants(
    n: u32,
    temperature: f64,
) -> Result<DesignConstantsReport, ParamsError> {
    let probes = [(6.022e23, 0.1), (2.5e24, 0.37)];
    let a = design_formulas(probes[0].0, probes[0].1, n, temperature)?;
    let b = design_formulas(probes[1].0, probes[1].1, n, temperature)?;
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    Ok(DesignConstantsReport {
        c_a_eff: a.c_a_eff,
        c_t_eff: a.c_t_eff,
        c_a_reference: C_A_REFERENCE,
        c_t_reference: C_T_REFERENCE,
        c_a_rel_dev: rel(a.c_a_eff, C_A_REFERENCE),
        c_t_rel_dev: rel(a.c_t_eff, C_T_REFERENCE),
        c_a_pair_spread: rel(a.c_a_eff, b.c_a_eff),
        c_t_pair_spread: rel(a.c_t_eff, b.c_t_eff),
    })
}
