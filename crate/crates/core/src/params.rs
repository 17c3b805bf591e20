//! Scenario description and every derived physical quantity.
//!
//! All operations are pure functions of their arguments plus the fixed
//! constants in [`crate::constants`]; [`derive`] chains them into a full
//! [`DerivedParams`] for a given [`MediumParams`] scenario.

use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::float::FloatExt;

use crate::constants::{
    BOLTZMANN, DEFAULT_D_E, DEFAULT_D_G, DEFAULT_WAVENUMBER, E0Z_LINEAR_LIMIT, ELEMENTARY_CHARGE,
    HBAR, HYDRATION_OBSERVED_RANGE, MU_0, POLARIZATION_PER_FIELD, PROTON_MASS, SPEED_OF_LIGHT,
};

/// Default ratio l_b/l_s below which radiation slippage is considered fast
/// enough to carry emission out of a bunch.
pub const DEFAULT_SLIPPAGE_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamsError {
    #[error("{name} must be strictly positive, got {value:e}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("hydration number must be at least 1")]
    HydrationTooSmall,
    #[error("ion count must be at least 1, got {value:e}")]
    IonCountTooSmall { value: f64 },
    #[error("exactly one of the static field E0z and the polarization override must be supplied")]
    PolarizationSourceConflict,
    #[error("polarization fraction {p_z:e} outside (0, 1]")]
    PolarizationOutOfRange { p_z: f64 },
    #[error("static field must be non-negative, got {e0z:e} V/m")]
    NegativeField { e0z: f64 },
    #[error(
        "ion concentration {rho:e} m^-3 disagrees with N/V = {n_over_v:e} m^-3 \
         beyond 1e-6 relative"
    )]
    InconsistentConcentration { rho: f64, n_over_v: f64 },
    #[error("degenerate coupling: polarization is zero, the system has no drive")]
    DegenerateCoupling,
    #[error("ion speed {v:e} m/s must lie strictly between 0 and c")]
    SpeedOutOfRange { v: f64 },
}

/// Non-fatal scenario diagnostics surfaced by [`derive`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamsWarning {
    /// Hydration number outside the observed 20..=40 range.
    HydrationOutsideObservedRange { n: u32 },
    /// Static field beyond the validity limit of the linear P_z response.
    FieldBeyondLinearRange,
}

impl core::fmt::Display for ParamsWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::HydrationOutsideObservedRange { n } => write!(
                f,
                "hydration number {n} outside the observed range {}..={}",
                HYDRATION_OBSERVED_RANGE.0, HYDRATION_OBSERVED_RANGE.1
            ),
            Self::FieldBeyondLinearRange => write!(
                f,
                "static field exceeds {E0Z_LINEAR_LIMIT:e} V/m; the linear polarization \
                 response is extrapolated"
            ),
        }
    }
}

/// User-facing scenario description. SI units throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumParams {
    /// Water molecules solvating one ion.
    pub n: u32,
    /// Temperature (K).
    pub temperature: f64,
    /// Ion number concentration (m⁻³).
    pub rho: f64,
    /// Static field inducing the permanent polarization (V/m). Exactly one of
    /// `e0z` and `pz_override` must be set.
    pub e0z: Option<f64>,
    /// Directly prescribed polarization fraction in (0, 1].
    pub pz_override: Option<f64>,
    /// Ion count. Kept as f64: realistic counts exceed 2^53 only for
    /// unphysical volumes, and only the ratio `n_ions / volume` enters the
    /// dynamics.
    pub n_ions: f64,
    /// System volume (m³).
    pub volume: f64,
    /// Resonance wavenumber of the two-level gap (m⁻¹).
    pub wavenumber: f64,
    /// Dipole half-length parameter (m).
    pub d_e: f64,
    /// Gyration length of the water molecule (m).
    pub d_g: f64,
}

impl Default for MediumParams {
    /// The worked reference scenario: n = 30 waters per ion at room
    /// temperature, rho = 6.022e23 ions/m³ in a 1 cm³ box, driven by a
    /// 10⁶ V/m static field.
    fn default() -> Self {
        let rho = 6.022e23;
        let volume = 1.0e-6;
        Self {
            n: 30,
            temperature: 300.0,
            rho,
            e0z: Some(1.0e6),
            pz_override: None,
            n_ions: rho * volume,
            volume,
            wavenumber: DEFAULT_WAVENUMBER,
            d_e: DEFAULT_D_E,
            d_g: DEFAULT_D_G,
        }
    }
}

/// Everything [`derive`] computes from a scenario. SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams {
    /// Coherence length, the resonant photon wavelength (m).
    pub l_c: f64,
    /// Resonance angular frequency (rad/s).
    pub omega_c: f64,
    /// Two-level gap energy (J).
    pub eps: f64,
    /// Permanent dipole moment d₀ = 2·e·d_e (C·m).
    pub d0: f64,
    /// Dipole rescaled by the two-level matrix element, d₀·√(2/3) (C·m).
    pub d0_tilde: f64,
    /// Average moment of inertia of the rotating water molecule (kg·m²).
    pub i_w: f64,
    /// Thermal population difference per ion (dimensionless).
    pub delta_n: f64,
    /// Polarization fraction in (0, 1].
    pub p_z: f64,
    /// Polarization-weighted rescaled dipole P_z·d̃₀ (C·m).
    pub d0_tilde_ave: f64,
    /// Phase-drive coupling coefficient alpha = Δn·ω_c·d̃₀ᵃᵛᵉ/(n·I_w).
    pub alpha: f64,
    /// Field-drive coupling coefficient beta = μ₀·c²·ρ·Δn·d̃₀ᵃᵛᵉ/2.
    pub beta: f64,
    /// Field amplitude scale (2β²/α)^(1/3); the physical amplitude at scaled
    /// amplitude one.
    pub a_scale: f64,
    /// Time scale (2/(αβ))^(1/3) (s); the gain time.
    pub t_scale: f64,
    /// Echo of the hydration number, needed by the unscaled equations of
    /// motion and the momentum scale transform.
    pub hydration_n: u32,
}

/// Resonance quantities derived from the wavenumber alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub l_c: f64,
    pub omega_c: f64,
    pub eps: f64,
}

/// Permanent and rescaled dipole moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleMoments {
    pub d0: f64,
    pub d0_tilde: f64,
}

/// Field and time scales of the dimensionless system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactors {
    pub a_scale: f64,
    pub t_scale: f64,
}

/// Closed-form design prediction for a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPrediction {
    /// Physical field amplitude when the scaled amplitude reaches one.
    pub a_sat_physical: f64,
    /// Gain time (s).
    pub t_gain: f64,
    /// a_sat / (ρ^(2/3)·P_z^(1/3)); independent of ρ and P_z.
    pub c_a_eff: f64,
    /// t_gain · ρ^(1/3)·P_z^(2/3); independent of ρ and P_z.
    pub c_t_eff: f64,
}

/// Outcome of the radiation slippage check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlippageReport {
    /// Slippage length (c−v)·l_g/v (m).
    pub l_s: f64,
    /// l_b / l_s.
    pub ratio: f64,
    pub condition_met: bool,
}

/// A derivation result: the parameters plus any non-fatal warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub params: DerivedParams,
    pub warnings: Vec<ParamsWarning>,
}

fn require_positive(name: &'static str, value: f64) -> Result<(), ParamsError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ParamsError::NonPositive { name, value })
    }
}

/// Coherence length, angular frequency and gap energy of the resonance.
///
/// l_c = 1/wavenumber, ω_c = c·wavenumber, ε = ħ·c·wavenumber. The gap is
/// linear in the wavenumber (no 2π), which reproduces both the ~63 μm
/// coherence length and ε/k_BT ≈ 0.12 at room temperature.
pub fn resonance_params(wavenumber: f64) -> Result<Resonance, ParamsError> {
    require_positive("wavenumber", wavenumber)?;
    Ok(Resonance {
        l_c: 1.0 / wavenumber,
        omega_c: SPEED_OF_LIGHT * wavenumber,
        eps: HBAR * SPEED_OF_LIGHT * wavenumber,
    })
}

/// Permanent dipole d₀ = 2·e·d_e and its two-level rescaling d₀·√(2/3).
pub fn dipole_constants(d_e: f64) -> Result<DipoleMoments, ParamsError> {
    require_positive("d_e", d_e)?;
    let d0 = 2.0 * ELEMENTARY_CHARGE * d_e;
    Ok(DipoleMoments {
        d0,
        d0_tilde: d0 * (2.0f64 / 3.0).sqrt(),
    })
}

/// Average moment of inertia I_w = 2·m_p·d_g².
pub fn moment_of_inertia(d_g: f64) -> Result<f64, ParamsError> {
    require_positive("d_g", d_g)?;
    Ok(2.0 * PROTON_MASS * d_g * d_g)
}

/// Thermal population difference per ion, Δn = n·tanh(ε/(k_B·T)).
pub fn population_difference(n: u32, eps: f64, temperature: f64) -> Result<f64, ParamsError> {
    if n < 1 {
        return Err(ParamsError::HydrationTooSmall);
    }
    require_positive("eps", eps)?;
    require_positive("T", temperature)?;
    Ok(f64::from(n) * (eps / (BOLTZMANN * temperature)).tanh())
}

/// Linear polarization response P_z = c_P·E_0z.
///
/// Returns the polarization fraction and a warning when the field exceeds the
/// linear-response validity limit. A fraction above one is a hard error.
pub fn polarization_from_field(e0z: f64) -> Result<(f64, Option<ParamsWarning>), ParamsError> {
    if !(e0z >= 0.0) || !e0z.is_finite() {
        return Err(ParamsError::NegativeField { e0z });
    }
    let p_z = POLARIZATION_PER_FIELD * e0z;
    if p_z > 1.0 {
        return Err(ParamsError::PolarizationOutOfRange { p_z });
    }
    let warning = (e0z > E0Z_LINEAR_LIMIT).then_some(ParamsWarning::FieldBeyondLinearRange);
    Ok((p_z, warning))
}

/// Coupling coefficients of the canonical equations.
///
/// alpha = Δn·ω_c·d̃₀ᵃᵛᵉ/(n·I_w) drives the phase momenta; beta =
/// μ₀·c²·ρ·Δn·d̃₀ᵃᵛᵉ/2 drives the field, with d̃₀ᵃᵛᵉ = P_z·d̃₀ and ρ = N/V.
pub fn coupling_coefficients(
    delta_n: f64,
    omega_c: f64,
    d0_tilde_ave: f64,
    n: u32,
    i_w: f64,
    rho: f64,
) -> Result<(f64, f64), ParamsError> {
    if n < 1 {
        return Err(ParamsError::HydrationTooSmall);
    }
    if d0_tilde_ave == 0.0 {
        return Err(ParamsError::DegenerateCoupling);
    }
    require_positive("delta_n", delta_n)?;
    require_positive("omega_c", omega_c)?;
    require_positive("d0_tilde_ave", d0_tilde_ave)?;
    require_positive("I_w", i_w)?;
    require_positive("rho", rho)?;
    let alpha = delta_n * omega_c * d0_tilde_ave / (f64::from(n) * i_w);
    let beta = MU_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT * rho * delta_n * d0_tilde_ave / 2.0;
    Ok((alpha, beta))
}

/// Field and time scales mapping the physical system onto the dimensionless
/// one: A₀ = a_scale·𝒜₀ and t = t_scale·τ.
pub fn scale_factors(alpha: f64, beta: f64) -> Result<ScaleFactors, ParamsError> {
    require_positive("alpha", alpha)?;
    require_positive("beta", beta)?;
    Ok(ScaleFactors {
        a_scale: (2.0 * beta * beta / alpha).cbrt(),
        t_scale: (2.0 / (alpha * beta)).cbrt(),
    })
}

/// Closed-form design prediction: saturated physical amplitude, gain time and
/// the factored scenario-independent coefficients.
///
/// Uses the default wavenumber and molecular geometry; ρ, P_z, n and T are the
/// quantities the scaling laws depend on.
pub fn design_formulas(
    rho: f64,
    p_z: f64,
    n: u32,
    temperature: f64,
) -> Result<DesignPrediction, ParamsError> {
    require_positive("rho", rho)?;
    if !(p_z > 0.0 && p_z <= 1.0) {
        return Err(ParamsError::PolarizationOutOfRange { p_z });
    }
    let res = resonance_params(DEFAULT_WAVENUMBER)?;
    let dip = dipole_constants(DEFAULT_D_E)?;
    let i_w = moment_of_inertia(DEFAULT_D_G)?;
    let delta_n = population_difference(n, res.eps, temperature)?;
    let d0_tilde_ave = p_z * dip.d0_tilde;
    let (alpha, beta) = coupling_coefficients(delta_n, res.omega_c, d0_tilde_ave, n, i_w, rho)?;
    let scales = scale_factors(alpha, beta)?;
    let rho_cbrt = rho.cbrt();
    let pz_cbrt = p_z.cbrt();
    Ok(DesignPrediction {
        a_sat_physical: scales.a_scale,
        t_gain: scales.t_scale,
        c_a_eff: scales.a_scale / (rho_cbrt * rho_cbrt * pz_cbrt),
        c_t_eff: scales.t_scale * rho_cbrt * pz_cbrt * pz_cbrt,
    })
}

/// Lennard-Jones pair potential 4ε[(σ/r)¹² − (σ/r)⁶].
pub fn lennard_jones(r: f64, eps_lj: f64, sigma_lj: f64) -> Result<f64, ParamsError> {
    require_positive("r", r)?;
    require_positive("eps_LJ", eps_lj)?;
    require_positive("sigma_LJ", sigma_lj)?;
    let s = sigma_lj / r;
    let s2 = s * s;
    let s6 = s2 * s2 * s2;
    Ok(4.0 * eps_lj * (s6 * s6 - s6))
}

/// Slippage length l_s = (c−v)·l_g/v and whether the bunch is short enough
/// (l_b/l_s below `threshold`) for its radiation to escape within a gain
/// length.
pub fn slippage_check(
    l_b: f64,
    l_g: f64,
    v: f64,
    threshold: f64,
) -> Result<SlippageReport, ParamsError> {
    require_positive("l_b", l_b)?;
    require_positive("l_g", l_g)?;
    require_positive("threshold", threshold)?;
    if !(v > 0.0 && v < SPEED_OF_LIGHT) {
        return Err(ParamsError::SpeedOutOfRange { v });
    }
    let l_s = (SPEED_OF_LIGHT - v) * l_g / v;
    let ratio = l_b / l_s;
    Ok(SlippageReport {
        l_s,
        ratio,
        condition_met: ratio < threshold,
    })
}

impl MediumParams {
    /// Validate the scenario, returning non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<ParamsWarning>, ParamsError> {
        if self.n < 1 {
            return Err(ParamsError::HydrationTooSmall);
        }
        require_positive("T", self.temperature)?;
        require_positive("rho", self.rho)?;
        require_positive("V", self.volume)?;
        require_positive("wavenumber", self.wavenumber)?;
        require_positive("d_e", self.d_e)?;
        require_positive("d_g", self.d_g)?;
        if !self.n_ions.is_finite() || self.n_ions < 1.0 {
            return Err(ParamsError::IonCountTooSmall {
                value: self.n_ions,
            });
        }
        match (self.e0z, self.pz_override) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(ParamsError::PolarizationSourceConflict),
        }
        let n_over_v = self.n_ions / self.volume;
        if (n_over_v - self.rho).abs() > 1e-6 * self.rho {
            return Err(ParamsError::InconsistentConcentration {
                rho: self.rho,
                n_over_v,
            });
        }
        let mut warnings = Vec::new();
        if self.n < HYDRATION_OBSERVED_RANGE.0 || self.n > HYDRATION_OBSERVED_RANGE.1 {
            warnings.push(ParamsWarning::HydrationOutsideObservedRange { n: self.n });
        }
        Ok(warnings)
    }

    /// Resolve the polarization fraction from whichever source is configured.
    fn polarization(&self) -> Result<(f64, Option<ParamsWarning>), ParamsError> {
        match (self.e0z, self.pz_override) {
            (Some(e0z), None) => polarization_from_field(e0z),
            (None, Some(p_z)) => {
                if p_z > 0.0 && p_z <= 1.0 {
                    Ok((p_z, None))
                } else {
                    Err(ParamsError::PolarizationOutOfRange { p_z })
                }
            }
            _ => Err(ParamsError::PolarizationSourceConflict),
        }
    }
}

/// Derive every model parameter for a scenario.
pub fn derive(medium: &MediumParams) -> Result<Derivation, ParamsError> {
    let mut warnings = medium.validate()?;
    let res = resonance_params(medium.wavenumber)?;
    let dip = dipole_constants(medium.d_e)?;
    let i_w = moment_of_inertia(medium.d_g)?;
    let delta_n = population_difference(medium.n, res.eps, medium.temperature)?;
    let (p_z, field_warning) = medium.polarization()?;
    if let Some(w) = field_warning {
        warnings.push(w);
    }
    if p_z == 0.0 {
        return Err(ParamsError::DegenerateCoupling);
    }
    let d0_tilde_ave = p_z * dip.d0_tilde;
    let (alpha, beta) =
        coupling_coefficients(delta_n, res.omega_c, d0_tilde_ave, medium.n, i_w, medium.rho)?;
    let scales = scale_factors(alpha, beta)?;
    Ok(Derivation {
        params: DerivedParams {
            l_c: res.l_c,
            omega_c: res.omega_c,
            eps: res.eps,
            d0: dip.d0,
            d0_tilde: dip.d0_tilde,
            i_w,
            delta_n,
            p_z,
            d0_tilde_ave,
            alpha,
            beta,
            a_scale: scales.a_scale,
            t_scale: scales.t_scale,
            hydration_n: medium.n,
        },
        warnings,
    })
}
