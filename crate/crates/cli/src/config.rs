//! TOML configuration schema and conversion to the core types.
//!
//! The file is flat key-value text with `[medium]`, `[sim]` and `[sweep]`
//! sections. Physical quantities are SI throughout and the key names carry
//! the unit; scaled (dimensionless) quantities have no unit suffix. The
//! `[medium]` scenario keys are required when a file is given, everything
//! else defaults to the built-in reference scenario.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hydrofel_core::dynamics::{PhaseInitMode, SimConfig};
use hydrofel_core::params::MediumParams;
use hydrofel_core::sweep::{SweepAxis, SweepMode, SweepObservable, SweepSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub medium: MediumSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    /// Water molecules solvating one ion.
    pub hydration_n: u32,
    pub temperature_k: f64,
    /// Ion number concentration (m⁻³).
    pub rho_per_m3: f64,
    /// Static field (V/m); exactly one of this and `pz` must be present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e0z_v_per_m: Option<f64>,
    /// Polarization fraction in (0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pz: Option<f64>,
    /// Ion count; defaults to rho · volume.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ions: Option<f64>,
    #[serde(default = "default_volume")]
    pub volume_m3: f64,
    #[serde(default = "default_wavenumber")]
    pub wavenumber_per_m: f64,
    #[serde(default = "default_d_e")]
    pub d_e_m: f64,
    #[serde(default = "default_d_g")]
    pub d_g_m: f64,
}

fn default_volume() -> f64 {
    1.0e-6
}
fn default_wavenumber() -> f64 {
    hydrofel_core::constants::DEFAULT_WAVENUMBER
}
fn default_d_e() -> f64 {
    hydrofel_core::constants::DEFAULT_D_E
}
fn default_d_g() -> f64 {
    hydrofel_core::constants::DEFAULT_D_G
}

impl Default for MediumSection {
    fn default() -> Self {
        let m = MediumParams::default();
        Self {
            hydration_n: m.n,
            temperature_k: m.temperature,
            rho_per_m3: m.rho,
            e0z_v_per_m: m.e0z,
            pz: m.pz_override,
            n_ions: Some(m.n_ions),
            volume_m3: m.volume,
            wavenumber_per_m: m.wavenumber,
            d_e_m: m.d_e,
            d_g_m: m.d_g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseInitName {
    UniformGrid,
    UniformRandom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub n_particles: usize,
    pub seed: u64,
    /// Initial scaled field amplitude.
    pub a0_init: f64,
    pub phi_init: f64,
    pub bunching_seed: f64,
    pub p_spread: f64,
    pub d_tau: f64,
    pub tau_max: f64,
    pub phase_init: PhaseInitName,
    pub record_stride: usize,
    /// Scaled-amplitude window for the growth-rate fit in the run summary;
    /// the default sits above the shot-noise seed of the default particle
    /// count.
    pub growth_fit_lo: f64,
    pub growth_fit_hi: f64,
    pub saturation_threshold: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            n_particles: s.n_particles,
            seed: s.seed,
            a0_init: s.a0_init,
            phi_init: s.phi_init,
            bunching_seed: s.bunching_seed,
            p_spread: s.p_spread,
            d_tau: s.d_tau,
            tau_max: s.tau_max,
            phase_init: PhaseInitName::UniformRandom,
            record_stride: s.record_stride,
            growth_fit_lo: 0.1,
            growth_fit_hi: 0.5,
            saturation_threshold: hydrofel_core::diagnostics::DEFAULT_SATURATION_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisName {
    #[serde(rename = "rho")]
    Rho,
    #[serde(rename = "e0z", alias = "E0z")]
    E0z,
    #[serde(rename = "n_ions", alias = "N_ions")]
    NIons,
    #[serde(rename = "temperature", alias = "T")]
    Temperature,
    #[serde(rename = "hydration", alias = "n")]
    Hydration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableName {
    SatAmplitudePhysical,
    GainTimePhysical,
    SatIntensityPhysical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    PerRow,
    SharedScaledRun,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: AxisName,
    /// Strictly positive ascending axis values; at least three.
    pub values: Vec<f64>,
    pub observable: ObservableName,
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    #[serde(default = "default_sweep_lo")]
    pub growth_fit_lo: f64,
    #[serde(default = "default_sweep_hi")]
    pub growth_fit_hi: f64,
    #[serde(default = "default_sat_threshold")]
    pub saturation_threshold: f64,
}

fn default_mode() -> ModeName {
    ModeName::PerRow
}
fn default_sweep_lo() -> f64 {
    hydrofel_core::sweep::DEFAULT_SWEEP_GROWTH_WINDOW.0
}
fn default_sweep_hi() -> f64 {
    hydrofel_core::sweep::DEFAULT_SWEEP_GROWTH_WINDOW.1
}
fn default_sat_threshold() -> f64 {
    hydrofel_core::diagnostics::DEFAULT_SATURATION_THRESHOLD
}

impl Default for FileConfig {
    /// The built-in reference scenario, used when no config file is given.
    fn default() -> Self {
        Self {
            medium: MediumSection::default(),
            sim: SimSection::default(),
            sweep: None,
        }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let cfg: FileConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        Ok(cfg)
    }

    pub fn medium_params(&self) -> MediumParams {
        let m = &self.medium;
        MediumParams {
            n: m.hydration_n,
            temperature: m.temperature_k,
            rho: m.rho_per_m3,
            e0z: m.e0z_v_per_m,
            pz_override: m.pz,
            n_ions: m.n_ions.unwrap_or(m.rho_per_m3 * m.volume_m3),
            volume: m.volume_m3,
            wavenumber: m.wavenumber_per_m,
            d_e: m.d_e_m,
            d_g: m.d_g_m,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.sim;
        SimConfig {
            n_particles: s.n_particles,
            seed: s.seed,
            a0_init: s.a0_init,
            phi_init: s.phi_init,
            bunching_seed: s.bunching_seed,
            p_spread: s.p_spread,
            d_tau: s.d_tau,
            tau_max: s.tau_max,
            phase_init: match s.phase_init {
                PhaseInitName::UniformGrid => PhaseInitMode::UniformGrid,
                PhaseInitName::UniformRandom => PhaseInitMode::UniformRandom,
            },
            record_stride: s.record_stride,
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let Some(sw) = &self.sweep else {
            bail!("config has no [sweep] section");
        };
        Ok(SweepSpec {
            axis: match sw.axis {
                AxisName::Rho => SweepAxis::Rho,
                AxisName::E0z => SweepAxis::E0z,
                AxisName::NIons => SweepAxis::NIons,
                AxisName::Temperature => SweepAxis::Temperature,
                AxisName::Hydration => SweepAxis::Hydration,
            },
            values: sw.values.clone(),
            base: self.medium_params(),
            sim: self.sim_config(),
            observable: match sw.observable {
                ObservableName::SatAmplitudePhysical => SweepObservable::SatAmplitudePhysical,
                ObservableName::GainTimePhysical => SweepObservable::GainTimePhysical,
                ObservableName::SatIntensityPhysical => SweepObservable::SatIntensityPhysical,
            },
            mode: match sw.mode {
                ModeName::PerRow => SweepMode::PerRow,
                ModeName::SharedScaledRun => SweepMode::SharedScaledRun,
            },
            growth_window: (sw.growth_fit_lo, sw.growth_fit_hi),
            saturation_threshold: sw.saturation_threshold,
        })
    }
}
