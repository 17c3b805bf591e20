//! Deterministic simulator and design calculator for a laser-type collective
//! instability in ion-solvated water.
//!
//! Solvation-shell water dipoles around slow co-moving ions exchange energy
//! with a single resonant radiation mode through the two lowest rotational
//! levels of each water molecule. After the two-level reduction the coupled
//! phase/field equations take the universal one-dimensional free-electron-laser
//! form, so the model splits cleanly into
//!
//! * [`params`] — closed-form derivation of every physical constant, coupling
//!   coefficient and scale factor from a scenario description,
//! * [`dynamics`] — state types, right-hand sides for the physical and the
//!   dimensionless system, deterministic initial conditions and the scale
//!   transform between the two,
//! * [`integrator`] — a fixed-step RK4 driver with per-step observers,
//! * [`diagnostics`] — bunching, the conserved quantity, growth-rate and
//!   power-law fits, saturation detection,
//! * [`sweep`] — parameter-grid execution that recovers the scaling laws.
//!
//! The crate is `no_std` compatible (with `alloc`); all floating-point
//! transcendentals fall back to `libm` when the `std` feature is disabled.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod constants;
pub mod diagnostics;
pub mod dynamics;
mod float;
pub mod integrator;
pub mod params;
pub mod sweep;

pub use diagnostics::TraceRecord;
pub use dynamics::{PhysState, SimConfig, SimState};
pub use params::{DerivedParams, MediumParams};
