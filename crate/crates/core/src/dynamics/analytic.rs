//! Closed-form nodal response of the Kron-reduced network with homogeneous inertia.
//!
//! A step injection `dP` at the event bus drives every mode independently. All functions
//! return the response to a positive injection; a generation loss is the same response with
//! the opposite sign. Every expression uses the post-disturbance inertia `m - dm`.

use std::f64::consts::PI;

use super::Disturbance;
use crate::error::{Error, Result};
use crate::network::ModalDecomposition;

/// `sqrt(lambda/m - gamma^2/4)`, or `None` when the mode is not underdamped.
pub fn modal_frequency(lambda: f64, m: f64, gamma: f64) -> Option<f64> {
    let disc = lambda / m - gamma * gamma / 4.0;
    (disc > 0.0).then(|| disc.sqrt())
}

fn checked_frequency(lambda: f64, m: f64, gamma: f64, mode: usize) -> Result<f64> {
    modal_frequency(lambda, m, gamma).ok_or(Error::Overdamped {
        mode,
        ratio: lambda / m,
        threshold: gamma * gamma / 4.0,
    })
}

/// Damped angular frequency of `mode` (rad/s).
pub fn underdamped_freq(modes: &ModalDecomposition, m: f64, gamma: f64, mode: usize) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::validation("average nodal inertia m > 0"));
    }
    checked_frequency(modes.eigenvalue(mode), m, gamma, mode)
}

fn effective_inertia(m: f64, dm: f64) -> Result<f64> {
    if m > dm && m > 0.0 {
        Ok(m - dm)
    } else {
        Err(Error::InertiaCollapse { m, dm })
    }
}

/// Constant-mode contribution to the frequency deviation, `dP (1 - e^{-gamma t}) / (N m gamma)`.
fn bulk_deviation(dp: f64, n: usize, m: f64, gamma: f64, t: f64) -> f64 {
    -dp * (-gamma * t).exp_m1() / (n as f64 * m * gamma)
}

/// Frequency-deviation contribution of an oscillatory mode with coupling `c = beta_i beta_b`.
fn mode_deviation(dp: f64, c: f64, m: f64, gamma: f64, omega: f64, t: f64) -> f64 {
    dp * (-gamma * t / 2.0).exp() / m * c * (omega * t).sin() / omega
}

/// Windowed RoCoF (Hz/s) of the constant mode.
pub fn rocof_bulk(m: f64, gamma: f64, dp: f64, n: usize, t: f64, dt: f64) -> f64 {
    -dp * (-gamma * t).exp() * (-gamma * dt).exp_m1() / (2.0 * n as f64 * PI * m * gamma * dt)
}

/// Windowed RoCoF (Hz/s) of one oscillatory mode, expanded form.
pub fn rocof_mode_term(dp: f64, c: f64, m: f64, gamma: f64, omega: f64, t: f64, dt: f64) -> f64 {
    dp * (-gamma * t / 2.0).exp() / (2.0 * PI * m) * c / (omega * dt)
        * ((-gamma * dt / 2.0).exp() * (omega * (t + dt)).sin() - (omega * t).sin())
}

struct Setup {
    dp: f64,
    m: f64,
    b: usize,
}

fn setup(modes: &ModalDecomposition, m: f64, dist: &Disturbance) -> Result<Setup> {
    Ok(Setup {
        dp: dist.power_loss,
        m: effective_inertia(m, dist.inertia_loss)?,
        b: modes.position(dist.event_bus)?,
    })
}

/// Frequency deviation `d theta_i / dt` (rad/s) at bus position `i`, full modal sum.
pub fn nodal_freq_deviation(
    modes: &ModalDecomposition,
    m: f64,
    gamma: f64,
    dist: &Disturbance,
    i: usize,
    t: f64,
) -> Result<f64> {
    let s = setup(modes, m, dist)?;
    let n = modes.len();
    let mut total = bulk_deviation(s.dp, n, s.m, gamma, t);
    for a in 2..=n {
        let omega = checked_frequency(modes.eigenvalue(a), s.m, gamma, a)?;
        total += mode_deviation(s.dp, modes.coupling(a, i, s.b), s.m, gamma, omega, t);
    }
    Ok(total)
}

/// Windowed RoCoF (Hz/s) at bus position `i` from the expanded modal sum.
pub fn rocof_full(
    modes: &ModalDecomposition,
    m: f64,
    gamma: f64,
    dist: &Disturbance,
    i: usize,
    t: f64,
    dt: f64,
) -> Result<f64> {
    Ok(rocof_terms(modes, m, gamma, dist, i, t, dt)?.iter().sum())
}

/// Windowed RoCoF (Hz/s) as the difference of two frequency-deviation evaluations.
pub fn rocof_full_difference(
    modes: &ModalDecomposition,
    m: f64,
    gamma: f64,
    dist: &Disturbance,
    i: usize,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let f1 = nodal_freq_deviation(modes, m, gamma, dist, i, t + dt)?;
    let f0 = nodal_freq_deviation(modes, m, gamma, dist, i, t)?;
    Ok((f1 - f0) / (2.0 * PI * dt))
}

/// Per-mode RoCoF contributions; element `a - 1` belongs to mode `a`.
pub fn rocof_terms(
    modes: &ModalDecomposition,
    m: f64,
    gamma: f64,
    dist: &Disturbance,
    i: usize,
    t: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::validation("RoCoF window dt > 0"));
    }
    let s = setup(modes, m, dist)?;
    let n = modes.len();
    let mut terms = Vec::with_capacity(n);
    terms.push(rocof_bulk(s.m, gamma, s.dp, n, t, dt));
    for a in 2..=n {
        let omega = checked_frequency(modes.eigenvalue(a), s.m, gamma, a)?;
        terms.push(rocof_mode_term(
            s.dp,
            modes.coupling(a, i, s.b),
            s.m,
            gamma,
            omega,
            t,
            dt,
        ));
    }
    Ok(terms)
}

/// Bulk term plus the Fiedler-mode term, in closed form from scalar inputs.
///
/// `coupling` is `beta_2i * beta_2b` and `m` the (already post-contingency) inertia.
#[allow(clippy::too_many_arguments)]
pub fn two_mode_value(
    coupling: f64,
    lambda2: f64,
    n: usize,
    m: f64,
    gamma: f64,
    dp: f64,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let omega = checked_frequency(lambda2, m, gamma, 2)?;
    Ok(rocof_bulk(m, gamma, dp, n, t, dt) + rocof_mode_term(dp, coupling, m, gamma, omega, t, dt))
}

/// Two-mode RoCoF approximation (Hz/s) at bus position `i`.
pub fn rocof_two_mode(
    modes: &ModalDecomposition,
    m: f64,
    gamma: f64,
    dist: &Disturbance,
    i: usize,
    t: f64,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::validation("RoCoF window dt > 0"));
    }
    let s = setup(modes, m, dist)?;
    if modes.len() < 2 {
        return Ok(rocof_bulk(s.m, gamma, s.dp, 1, t, dt));
    }
    let c = modes.coupling(2, i, s.b);
    two_mode_value(c, modes.eigenvalue(2), modes.len(), s.m, gamma, s.dp, t, dt)
}

/// Left side of the locational RoCoF constraint: two-mode RoCoF at bus position `n` for the
/// loss of `p_loss` p.u. and `dm` of average nodal inertia at bus position `b`.
#[allow(clippy::too_many_arguments)]
pub fn rocof_constraint_lhs(
    modes: &ModalDecomposition,
    m_t: f64,
    dm: f64,
    p_loss: f64,
    n: usize,
    b: usize,
    t: f64,
    dt: f64,
    gamma: f64,
) -> Result<f64> {
    let m = effective_inertia(m_t, dm)?;
    if modes.len() < 2 {
        return Ok(rocof_bulk(m, gamma, p_loss, 1, t, dt));
    }
    let c = modes.coupling(2, n, b);
    two_mode_value(c, modes.eigenvalue(2), modes.len(), m, gamma, p_loss, t, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{eigendecompose, BusId, ReducedNetwork};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn ring3() -> ModalDecomposition {
        let l = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        eigendecompose(&ReducedNetwork {
            retained_buses: vec![BusId(1), BusId(2), BusId(3)],
            laplacian: l,
        })
        .unwrap()
    }

    fn two_bus() -> ModalDecomposition {
        eigendecompose(&ReducedNetwork {
            retained_buses: vec![BusId(1), BusId(2)],
            laplacian: DMatrix::from_row_slice(2, 2, &[5.0, -5.0, -5.0, 5.0]),
        })
        .unwrap()
    }

    fn dist(dp: f64) -> Disturbance {
        Disturbance {
            event_bus: BusId(1),
            power_loss: dp,
            inertia_loss: 0.0,
        }
    }

    #[test]
    fn underdamped_substitution() {
        assert_abs_diff_eq!(modal_frequency(4.0, 1.0, 2.0).unwrap(), 3f64.sqrt(), epsilon = 1e-15);
        assert!(modal_frequency(1.0, 1.0, 2.0).is_none());
        let modes = two_bus();
        let err = underdamped_freq(&modes, 100.0, 1.0, 2).unwrap_err();
        assert!(matches!(err, Error::Overdamped { mode: 2, .. }));
    }

    #[test]
    fn deviation_vanishes_at_zero() {
        let modes = ring3();
        for i in 0..3 {
            assert_eq!(nodal_freq_deviation(&modes, 0.1, 1.0, &dist(0.1), i, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_bus_closed_form() {
        let modes = eigendecompose(&ReducedNetwork {
            retained_buses: vec![BusId(1)],
            laplacian: DMatrix::zeros(1, 1),
        });
        // A lone bus has no second mode, so the decomposition itself is fine to build.
        let modes = modes.unwrap();
        let (dp, m, g, t) = (0.3, 0.2, 0.5, 1.7);
        let got = nodal_freq_deviation(&modes, m, g, &dist(dp), 0, t).unwrap();
        assert_abs_diff_eq!(got, dp * (1.0 - (-g * t).exp()) / (m * g), epsilon = 1e-14);
    }

    #[test]
    fn bulk_hand_values() {
        let v = rocof_bulk(1.0, 1.0, 1.0, 1, 0.0, 0.1);
        assert_abs_diff_eq!(v, (1.0 - (-0.1f64).exp()) / (2.0 * PI * 0.1), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.151456, epsilon = 1e-6);
        let lim = rocof_bulk(0.05, 1e-6, 0.1, 10, 0.0, 1.0);
        assert_abs_diff_eq!(lim, 0.031831, epsilon = 1e-6);
        assert!(rocof_bulk(0.05, 0.7, 0.1, 10, 200.0, 0.1) < 1e-40);
    }

    #[test]
    fn two_paths_agree_on_ring() {
        let modes = ring3();
        for i in 0..3 {
            for &t in &[0.0, 0.2, 0.75] {
                let a = rocof_full(&modes, 0.1, 1.0, &dist(0.1), i, t, 0.1).unwrap();
                let b = rocof_full_difference(&modes, 0.1, 1.0, &dist(0.1), i, t, 0.1).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn doubling_loss_doubles_rocof() {
        let modes = ring3();
        let a = rocof_full(&modes, 0.1, 1.0, &dist(0.1), 1, 0.3, 0.1).unwrap();
        let b = rocof_full(&modes, 0.1, 1.0, &dist(0.2), 1, 0.3, 0.1).unwrap();
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn two_mode_is_exact_on_two_buses() {
        let modes = two_bus();
        for i in 0..2 {
            let a = rocof_two_mode(&modes, 0.3, 0.7, &dist(0.5), i, 0.1, 0.1).unwrap();
            let b = rocof_full(&modes, 0.3, 0.7, &dist(0.5), i, 0.1, 0.1).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_coupling_is_bulk() {
        let v = two_mode_value(0.0, 3.0, 5, 0.2, 0.7, 0.4, 0.2, 0.1).unwrap();
        assert_eq!(v, rocof_bulk(0.2, 0.7, 0.4, 5, 0.2, 0.1));
    }

    #[test]
    fn constraint_lhs_without_loss_is_two_mode() {
        let modes = ring3();
        let a = rocof_constraint_lhs(&modes, 0.1, 0.0, 0.1, 1, 0, 0.0, 0.1, 1.0).unwrap();
        let b = rocof_two_mode(&modes, 0.1, 1.0, &dist(0.1), 1, 0.0, 0.1).unwrap();
        assert_eq!(a, b);
        let err = rocof_constraint_lhs(&modes, 0.1, 0.1, 0.1, 1, 0, 0.0, 0.1, 1.0).unwrap_err();
        assert!(matches!(err, Error::InertiaCollapse { .. }));
    }

    #[test]
    fn more_inertia_lowers_bulk() {
        let mut last = f64::INFINITY;
        for k in 1..20 {
            let v = rocof_bulk(0.01 * k as f64, 0.7, 1.0, 10, 0.0, 0.1);
            assert!(v < last);
            last = v;
        }
    }
}
