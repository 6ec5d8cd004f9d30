//! Unit system and physical constants.
//!
//! Everything downstream of the configuration boundary works in natural
//! units: energies in units of the rotational constant `B` (as an energy,
//! `h·B` with `B` in frequency units) and time in units of `t0 = ħ/B`.
//! The time-dependent Schrödinger equation then reads `i db/dτ = H̃ b` with
//! `H̃ = H/B` dimensionless.

use std::f64::consts::PI;

/// Planck constant, J·s (exact SI value).
pub const PLANCK_H: f64 = 6.62607015e-34;

/// One Debye in C·m.
pub const DEBYE: f64 = 3.335641e-30;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK_H / (2.0 * PI);

/// Energy of one unit of B in joules, for B given in MHz.
pub fn b_energy_joule(b_mhz: f64) -> f64 {
    PLANCK_H * b_mhz * 1e6
}

/// Dipole-field interaction energy `μ·E` expressed in units of B.
pub fn dipole_coupling_in_b(mu_debye: f64, field_v_per_m: f64, b_mhz: f64) -> f64 {
    mu_debye * DEBYE * field_v_per_m / b_energy_joule(b_mhz)
}

/// Rotational time unit `t0 = ħ/B` in seconds.
pub fn t0_seconds(b_mhz: f64) -> f64 {
    HBAR / b_energy_joule(b_mhz)
}
