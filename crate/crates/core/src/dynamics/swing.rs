//! Fixed-step RK4 integration of `M theta'' + D theta' = P - L theta` on a reduced network.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Disturbance;
use crate::error::{Error, Result};
use crate::network::{BusId, ReducedNetwork};
use crate::units::rad_to_hz;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Integration step (s).
    pub step: f64,
    /// Simulated time after the disturbance (s).
    pub horizon: f64,
    /// RoCoF measuring window (s); must be a whole number of steps.
    pub rocof_window: f64,
    /// Damping-to-inertia ratio; every bus gets `d_i = gamma * m_i`.
    pub gamma: f64,
    pub f0: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 5.0,
            rocof_window: 0.1,
            gamma: 0.7,
            f0: 60.0,
        }
    }
}

impl SimulationOptions {
    fn steps(&self) -> Result<(usize, usize)> {
        if !(self.step > 0.0 && self.horizon > 0.0 && self.rocof_window > 0.0) {
            return Err(Error::validation("step, horizon and RoCoF window are positive"));
        }
        if !(self.gamma > 0.0 && self.f0 > 0.0) {
            return Err(Error::validation("gamma > 0 and f0 > 0"));
        }
        let n = (self.horizon / self.step).round() as usize;
        let w = (self.rocof_window / self.step).round() as usize;
        if (w as f64 * self.step - self.rocof_window).abs() > 1e-9 * self.rocof_window || w == 0 {
            return Err(Error::validation(
                "RoCoF window is a whole number of integration steps",
            ));
        }
        if w > n {
            return Err(Error::validation("RoCoF window fits inside the horizon"));
        }
        Ok((n, w))
    }
}

/// Post-disturbance trajectories. Angles and frequencies are deviations from the
/// pre-disturbance equilibrium; index `[bus][k]` follows `buses` and `time`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationResult {
    pub buses: Vec<BusId>,
    pub time: Vec<f64>,
    pub f0: f64,
    pub rocof_window: f64,
    /// rad
    pub angle: Vec<Vec<f64>>,
    /// rad/s
    pub freq_deviation: Vec<Vec<f64>>,
    /// Hz/s over `[t, t + window]`; `None` once the window leaves the horizon.
    pub rocof: Vec<Vec<Option<f64>>>,
    /// Centre-of-inertia frequency deviation (Hz).
    pub coi_deviation_hz: Vec<f64>,
    pub coi_rocof: Vec<Option<f64>>,
    pub max_abs_rocof: Vec<f64>,
    /// Lowest absolute frequency per bus (Hz).
    pub min_freq: Vec<f64>,
    pub frequency_minimum: f64,
}

impl SimulationResult {
    pub fn freq_hz(&self, bus: usize, k: usize) -> f64 {
        self.f0 + rad_to_hz(self.freq_deviation[bus][k])
    }

    /// Bus with the largest windowed |RoCoF| and that value.
    pub fn worst_bus(&self) -> (BusId, f64) {
        self.buses
            .iter()
            .zip(&self.max_abs_rocof)
            .map(|(b, r)| (*b, *r))
            .fold((self.buses[0], f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
    }

    /// COI RoCoF right after the disturbance, from the first integration step.
    pub fn coi_initial_rocof(&self) -> f64 {
        (self.coi_deviation_hz[1] - self.coi_deviation_hz[0]) / (self.time[1] - self.time[0])
    }

    pub fn write_trajectory_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["time_s", "bus", "freq_hz", "rocof_hz_per_s"])?;
        for (k, t) in self.time.iter().enumerate() {
            for (i, bus) in self.buses.iter().enumerate() {
                let rocof = self.rocof[i][k].map(|r| r.to_string()).unwrap_or_default();
                w.write_record([
                    t.to_string(),
                    bus.to_string(),
                    self.freq_hz(i, k).to_string(),
                    rocof,
                ])?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_summary_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["bus", "max_abs_rocof", "min_freq"])?;
        for (i, bus) in self.buses.iter().enumerate() {
            w.write_record([
                bus.to_string(),
                self.max_abs_rocof[i].to_string(),
                self.min_freq[i].to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Split of the retained buses into those with inertia (integrated) and those without
/// (algebraic, eliminated by a further Kron step).
struct Partition {
    dynamic: Vec<usize>,
    algebraic: Vec<usize>,
}

/// Simulates the step loss described by `dist` starting from the equilibrium of `injections`.
///
/// `inertia` holds the pre-disturbance coefficient `m_i` of every retained bus (p.u.); the
/// event bus loses `N * dist.inertia_loss` of it. Buses left without inertia respond
/// algebraically.
pub fn simulate_swing(
    rn: &ReducedNetwork,
    inertia: &[f64],
    injections: &[f64],
    dist: &Disturbance,
    opts: &SimulationOptions,
) -> Result<SimulationResult> {
    let n = rn.len();
    if inertia.len() != n || injections.len() != n {
        return Err(Error::validation(
            "one inertia value and one injection per retained bus",
        ));
    }
    if inertia.iter().any(|m| !(*m >= 0.0)) {
        return Err(Error::validation("nodal inertia >= 0"));
    }
    if !(dist.power_loss >= 0.0 && dist.inertia_loss >= 0.0) {
        return Err(Error::validation("disturbance magnitudes are non-negative"));
    }
    let (steps, window) = opts.steps()?;
    let l = &rn.laplacian;
    check_equilibrium(l, injections)?;

    let b = rn.position(dist.event_bus)?;
    let mut m = inertia.to_vec();
    let removed = n as f64 * dist.inertia_loss;
    let scale_m = inertia.iter().cloned().fold(0.0, f64::max);
    if removed > m[b] * (1.0 + 1e-9) + 1e-15 {
        return Err(Error::InertiaCollapse {
            m: m[b],
            dm: removed,
        });
    }
    m[b] = (m[b] - removed).max(0.0);
    let floor = 1e-12 * scale_m.max(f64::MIN_POSITIVE);
    let part = Partition {
        dynamic: (0..n).filter(|&i| m[i] > floor).collect(),
        algebraic: (0..n).filter(|&i| m[i] <= floor).collect(),
    };
    if part.dynamic.is_empty() {
        return Err(Error::validation("at least one bus keeps inertia"));
    }

    // Deviation coordinates: the pre-disturbance equilibrium cancels, leaving the step.
    let mut u = DVector::zeros(n);
    u[b] = -dist.power_loss;

    let nd = part.dynamic.len();
    let l_dd = l.select_rows(&part.dynamic).select_columns(&part.dynamic);
    let u_d = u.select_rows(&part.dynamic);
    // Algebraic buses: x_A = L_AA^{-1} (u_A - L_AD x_D).
    let (k_mat, u_red, alg_map, alg_const) = if part.algebraic.is_empty() {
        (l_dd, u_d, DMatrix::zeros(0, nd), DVector::zeros(0))
    } else {
        let l_aa = l.select_rows(&part.algebraic).select_columns(&part.algebraic);
        let l_ad = l.select_rows(&part.algebraic).select_columns(&part.dynamic);
        let u_a = u.select_rows(&part.algebraic);
        let chol = l_aa.cholesky().ok_or(Error::SingularElimination)?;
        let map = -chol.solve(&l_ad);
        let cst = chol.solve(&u_a);
        let k = &l_dd + l_ad.transpose() * &map;
        let ur = &u_d + l_ad.transpose() * &cst * -1.0;
        (k, ur, map, cst)
    };
    let k_mat = (&k_mat + k_mat.transpose()) * 0.5;
    let m_d = DVector::from_iterator(nd, part.dynamic.iter().map(|&i| m[i]));
    let m_inv = m_d.map(|x| 1.0 / x);
    let damping = &m_d * opts.gamma;

    let accel = |x: &DVector<f64>, v: &DVector<f64>| -> DVector<f64> {
        (&u_red - &k_mat * x - damping.component_mul(v)).component_mul(&m_inv)
    };
    let energy = |x: &DVector<f64>, v: &DVector<f64>| -> f64 {
        0.5 * v.dot(&m_d.component_mul(v)) + 0.5 * x.dot(&(&k_mat * x)) - u_red.dot(x)
    };

    let h = opts.step;
    let mut x = DVector::zeros(nd);
    let mut v = DVector::zeros(nd);
    let mut angle = vec![Vec::with_capacity(steps + 1); n];
    let mut freq = vec![Vec::with_capacity(steps + 1); n];
    let mut record = |x: &DVector<f64>, v: &DVector<f64>| {
        for (j, &i) in part.dynamic.iter().enumerate() {
            angle[i].push(x[j]);
            freq[i].push(v[j]);
        }
        if !part.algebraic.is_empty() {
            let xa = &alg_map * x + &alg_const;
            let va = &alg_map * v;
            for (j, &i) in part.algebraic.iter().enumerate() {
                angle[i].push(xa[j]);
                freq[i].push(va[j]);
            }
        }
    };
    record(&x, &v);
    let mut e_prev = energy(&x, &v);
    let mut e_scale = e_prev.abs();
    for k in 1..=steps {
        let a1 = accel(&x, &v);
        let (x2, v2) = (&x + &v * (h / 2.0), &v + &a1 * (h / 2.0));
        let a2 = accel(&x2, &v2);
        let (x3, v3) = (&x + &v2 * (h / 2.0), &v + &a2 * (h / 2.0));
        let a3 = accel(&x3, &v3);
        let (x4, v4) = (&x + &v3 * h, &v + &a3 * h);
        let a4 = accel(&x4, &v4);
        x += (&v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
        v += (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * (h / 6.0);

        let e = energy(&x, &v);
        let growth = e - e_prev;
        e_scale = e_scale.max(e.abs());
        if !e.is_finite() || growth > 1e-9 * e_scale + 1e-300 {
            return Err(Error::StepUnstable {
                time: k as f64 * h,
                growth,
            });
        }
        e_prev = e;
        record(&x, &v);
    }

    let time: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let denom = 2.0 * std::f64::consts::PI * opts.rocof_window;
    let windowed = |series: &[f64]| -> Vec<Option<f64>> {
        (0..=steps)
            .map(|k| (k + window <= steps).then(|| (series[k + window] - series[k]) / denom))
            .collect()
    };
    let rocof: Vec<Vec<Option<f64>>> = freq.iter().map(|s| windowed(s)).collect();
    let m_total: f64 = m.iter().sum();
    let coi_rad: Vec<f64> = (0..=steps)
        .map(|k| (0..n).map(|i| m[i] * freq[i][k]).sum::<f64>() / m_total)
        .collect();
    let coi_rocof = windowed(&coi_rad);
    let coi_deviation_hz = coi_rad.into_iter().map(rad_to_hz).collect();
    let max_abs_rocof: Vec<f64> = rocof
        .iter()
        .map(|s| s.iter().flatten().fold(0.0_f64, |a, r| a.max(r.abs())))
        .collect();
    let min_freq: Vec<f64> = freq
        .iter()
        .map(|s| opts.f0 + rad_to_hz(s.iter().cloned().fold(f64::INFINITY, f64::min)))
        .collect();
    let frequency_minimum = min_freq.iter().cloned().fold(f64::INFINITY, f64::min);

    Ok(SimulationResult {
        buses: rn.retained_buses.clone(),
        time,
        f0: opts.f0,
        rocof_window: opts.rocof_window,
        angle,
        freq_deviation: freq,
        rocof,
        coi_deviation_hz,
        coi_rocof,
        max_abs_rocof,
        min_freq,
        frequency_minimum,
    })
}

/// `L theta = P` must be solvable: injections balance and the angle solution reproduces them.
fn check_equilibrium(l: &DMatrix<f64>, p: &[f64]) -> Result<()> {
    let n = p.len();
    let p = DVector::from_column_slice(p);
    let scale = p.amax().max(1.0);
    if n == 1 {
        let residual = p[0].abs();
        return if residual > 1e-9 * scale {
            Err(Error::NotEquilibrium { residual })
        } else {
            Ok(())
        };
    }
    // Fix the first angle to zero and solve the remaining block.
    let rest: Vec<usize> = (1..n).collect();
    let l_rr = l.select_rows(&rest).select_columns(&rest);
    let theta_r = l_rr
        .cholesky()
        .ok_or(Error::SingularElimination)?
        .solve(&p.select_rows(&rest));
    let mut theta = DVector::zeros(n);
    for (j, &i) in rest.iter().enumerate() {
        theta[i] = theta_r[j];
    }
    let residual = (l * theta - &p).amax();
    if residual > 1e-9 * scale {
        return Err(Error::NotEquilibrium { residual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{nodal_freq_deviation, rocof_full};
    use crate::network::eigendecompose;
    use approx::assert_abs_diff_eq;

    fn ring3() -> ReducedNetwork {
        ReducedNetwork {
            retained_buses: vec![BusId(1), BusId(2), BusId(3)],
            laplacian: DMatrix::from_row_slice(
                3,
                3,
                &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0],
            ),
        }
    }

    fn opts(horizon: f64, gamma: f64) -> SimulationOptions {
        SimulationOptions {
            horizon,
            gamma,
            ..Default::default()
        }
    }

    #[test]
    fn zero_disturbance_stays_flat() {
        let rn = ring3();
        let d = Disturbance {
            event_bus: BusId(1),
            power_loss: 0.0,
            inertia_loss: 0.0,
        };
        let r = simulate_swing(&rn, &[0.1; 3], &[0.5, -0.2, -0.3], &d, &opts(1.0, 1.0)).unwrap();
        assert!(r.freq_deviation.iter().flatten().all(|w| *w == 0.0));
        assert_eq!(r.frequency_minimum, 60.0);
    }

    #[test]
    fn unbalanced_injections_rejected() {
        let d = Disturbance {
            event_bus: BusId(1),
            power_loss: 0.1,
            inertia_loss: 0.0,
        };
        let err = simulate_swing(&ring3(), &[0.1; 3], &[0.5, 0.0, 0.0], &d, &opts(1.0, 1.0))
            .unwrap_err();
        assert!(matches!(err, Error::NotEquilibrium { .. }));
    }

    #[test]
    fn ring_matches_modal_solution() {
        let rn = ring3();
        let modes = eigendecompose(&rn).unwrap();
        let d = Disturbance {
            event_bus: BusId(1),
            power_loss: 0.1,
            inertia_loss: 0.0,
        };
        let r = simulate_swing(&rn, &[0.1; 3], &[0.0; 3], &d, &opts(1.0, 1.0)).unwrap();
        // t = 0.2 s is step 200.
        for i in 0..3 {
            let want = nodal_freq_deviation(&modes, 0.1, 1.0, &d, i, 0.2).unwrap();
            assert_abs_diff_eq!(-r.freq_deviation[i][200], want, epsilon = 1e-6);
            let want = rocof_full(&modes, 0.1, 1.0, &d, i, 0.0, 0.1).unwrap();
            assert_abs_diff_eq!(-r.rocof[i][0].unwrap(), want, epsilon = 1e-6);
        }
    }

    #[test]
    fn coi_initial_rocof_heterogeneous() {
        let rn = ring3();
        let m = [0.05, 0.2, 0.11];
        let d = Disturbance {
            event_bus: BusId(2),
            power_loss: 0.3,
            inertia_loss: 0.0,
        };
        let r = simulate_swing(&rn, &m, &[0.0; 3], &d, &opts(0.5, 0.7)).unwrap();
        let want = -0.3 / (2.0 * std::f64::consts::PI * m.iter().sum::<f64>());
        assert!((r.coi_initial_rocof() - want).abs() <= 0.01 * want.abs());
    }

    #[test]
    fn zero_inertia_bus_is_algebraic() {
        let rn = ring3();
        let d = Disturbance {
            event_bus: BusId(3),
            power_loss: 0.1,
            inertia_loss: 0.0,
        };
        let r = simulate_swing(&rn, &[0.1, 0.1, 0.0], &[0.0; 3], &d, &opts(0.5, 0.7)).unwrap();
        // Algebraic bus angle keeps the network in balance: (L x)_3 = -dP.
        let k = 250;
        let x: Vec<f64> = (0..3).map(|i| r.angle[i][k]).collect();
        let row3 = -x[0] - x[1] + 2.0 * x[2];
        assert_abs_diff_eq!(row3, -0.1, epsilon = 1e-12);
    }

    #[test]
    fn inertia_removed_at_event_bus() {
        let rn = ring3();
        let d = Disturbance {
            event_bus: BusId(1),
            power_loss: 0.1,
            inertia_loss: 0.1 / 3.0,
        };
        // The event bus ends with no inertia and becomes algebraic.
        let r = simulate_swing(&rn, &[0.1; 3], &[0.0; 3], &d, &opts(0.5, 0.7)).unwrap();
        let want = -0.1 / (2.0 * std::f64::consts::PI * 0.2);
        assert!((r.coi_initial_rocof() - want).abs() <= 0.01 * want.abs());
        let too_much = Disturbance {
            inertia_loss: 0.05,
            ..d
        };
        assert!(simulate_swing(&rn, &[0.1; 3], &[0.0; 3], &too_much, &opts(0.5, 0.7)).is_err());
    }

    #[test]
    fn csv_exports() {
        let rn = ring3();
        let d = Disturbance {
            event_bus: BusId(1),
            power_loss: 0.1,
            inertia_loss: 0.0,
        };
        let r = simulate_swing(&rn, &[0.1; 3], &[0.0; 3], &d, &opts(0.2, 1.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        r.write_trajectory_csv(dir.path().join("t.csv")).unwrap();
        r.write_summary_csv(dir.path().join("s.csv")).unwrap();
        let t = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert!(t.starts_with("time_s,bus,freq_hz,rocof_hz_per_s\n"));
        assert_eq!(t.lines().count(), 1 + 201 * 3);
        let s = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
        assert_eq!(s.lines().count(), 4);
    }
}
