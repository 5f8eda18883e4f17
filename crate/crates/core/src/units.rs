//! Unit conventions shared by the dynamics, surrogate and scheduling code.
//!
//! * Inertia constants `H` are in seconds on the machine base (its `p_max`).
//! * Stored kinetic energy `E = H * S` is in MWs; schedules report system inertia this way.
//! * The swing-equation inertia coefficient is `m = 2E / (w0 * S_base)` with
//!   `w0 = 2*pi*f0` rad/s, giving p.u.*s^2/rad on the system base. Damping `d = gamma * m`.
//! * Angular frequency deviations are rad/s; RoCoF is reported in Hz/s (divide by `2*pi`).
//!
//! With these conventions a power step `dP` (p.u.) on a system with total coefficient
//! `M` produces an initial centre-of-inertia RoCoF of `dP / (2*pi*M)` Hz/s, which equals
//! `dP_MW * f0 / (2 * E)`.

use std::f64::consts::PI;

/// Nominal angular frequency in rad/s.
pub fn omega0(f0: f64) -> f64 {
    2.0 * PI * f0
}

/// Kinetic energy (MWs) of a machine with inertia constant `h_s` and rating `rating_mw`.
pub fn kinetic_energy(h_s: f64, rating_mw: f64) -> f64 {
    h_s * rating_mw
}

/// Swing-equation inertia coefficient (p.u.*s^2/rad) of `energy_mws` of stored energy.
pub fn energy_to_coefficient(energy_mws: f64, f0: f64, base_mva: f64) -> f64 {
    2.0 * energy_mws / (omega0(f0) * base_mva)
}

/// Inverse of [`energy_to_coefficient`].
pub fn coefficient_to_energy(m: f64, f0: f64, base_mva: f64) -> f64 {
    m * omega0(f0) * base_mva / 2.0
}

/// Inertia coefficient of one machine.
pub fn inertia_coefficient(h_s: f64, rating_mw: f64, f0: f64, base_mva: f64) -> f64 {
    energy_to_coefficient(kinetic_energy(h_s, rating_mw), f0, base_mva)
}

/// rad/s to Hz (also rad/s^2 to Hz/s).
pub fn rad_to_hz(x: f64) -> f64 {
    x / (2.0 * PI)
}
