//! Physical constants in SI units (CODATA 2018) and the fixed model constants.
//!
//! Everything here is a compile-time constant on purpose: scenario inputs live
//! in [`crate::params::MediumParams`], never in this module.

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant ħ (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Proton mass (kg).
pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Vacuum magnetic permeability μ₀ (H/m). The medium permeability of water is
/// taken equal to μ₀ throughout.
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// One Ångström (m).
pub const ANGSTROM: f64 = 1.0e-10;

/// Linear polarization response of the solvent under a static field,
/// P_z ≈ `POLARIZATION_PER_FIELD` · E_0z (m/V). Treated as a given constant;
/// valid for fields up to about [`E0Z_LINEAR_LIMIT`].
pub const POLARIZATION_PER_FIELD: f64 = 9.1e-9;

/// Static field above which the linear P_z(E_0z) response is no longer
/// trustworthy (V/m). Exceeding it produces a warning, not an error.
pub const E0Z_LINEAR_LIMIT: f64 = 1.0e7;

/// Default resonance wavenumber of the two-level rotational gap (m⁻¹),
/// i.e. 160 cm⁻¹.
pub const DEFAULT_WAVENUMBER: f64 = 1.6e4;

/// Default dipole half-length parameter d_e (m), 0.2 Å.
pub const DEFAULT_D_E: f64 = 0.2 * ANGSTROM;

/// Default gyration length d_g of the water molecule (m), 0.82 Å.
pub const DEFAULT_D_G: f64 = 0.82 * ANGSTROM;

/// Observed range of the hydration number; values outside warn but still run.
pub const HYDRATION_OBSERVED_RANGE: (u32, u32) = (20, 40);

/// Two-significant-figure reference value of the saturated-amplitude design
/// constant c_A (m³·kg·s⁻²·A⁻¹) that the derivation chain is validated
/// against (at n = 30, T = 300 K).
pub const C_A_REFERENCE: f64 = 2.6e-22;

/// Two-significant-figure reference value of the gain-time design constant
/// c_t (m⁻¹·s), same provenance as [`C_A_REFERENCE`].
pub const C_T_REFERENCE: f64 = 2.4e-4;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_positive() {
        for &v in &[
            SPEED_OF_LIGHT,
            HBAR,
            BOLTZMANN,
            PROTON_MASS,
            ELEMENTARY_CHARGE,
            MU_0,
            POLARIZATION_PER_FIELD,
            DEFAULT_WAVENUMBER,
            DEFAULT_D_E,
            DEFAULT_D_G,
        ] {
            assert!(v > 0.0);
        }
    }

    #[test]
    fn mu0_matches_fine_structure_route() {
        // mu0 = 2 alpha h / (e^2 c) with CODATA 2018 alpha; sanity to 1e-9.
        let alpha = 7.297_352_5693e-3;
        let h = 6.626_070_15e-34;
        let derived = 2.0 * alpha * h / (ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * SPEED_OF_LIGHT);
        assert!((derived - MU_0).abs() / MU_0 < 1e-9);
    }
}
