mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_network, ModalOracle};
use scuc_core::dynamics::{
    nodal_freq_deviation, rocof_bulk, rocof_full, rocof_full_difference, rocof_two_mode,
    simulate_swing, Disturbance, SimulationOptions,
};
use scuc_core::network::{build_laplacian, eigendecompose, kron_reduce};
use scuc_core::{BusId, GridCase, ReducedNetwork};

fn network(seed: u64, n: usize) -> ReducedNetwork {
    random_network(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

/// Inertia `scale` times below the point where mode 2 stops oscillating at `gamma`.
fn underdamped_m(rn: &ReducedNetwork, gamma: f64, scale: f64) -> f64 {
    let modes = eigendecompose(rn).unwrap();
    modes.eigenvalue(2) / (gamma * gamma / 4.0) / scale
}

#[test]
fn bundled_reduction_keeps_laplacian_structure() {
    let case = GridCase::ieee24();
    let full = build_laplacian(&case, None).unwrap();
    for row in full.matrix.row_iter() {
        assert!(row.sum().abs() <= 1e-9);
    }
    let rn = kron_reduce(&full, &case.generator_buses()).unwrap();
    let l = &rn.laplacian;
    assert_eq!(l.nrows(), 10);
    for i in 0..l.nrows() {
        assert!(l.row(i).sum().abs() <= 1e-9);
        for j in 0..l.ncols() {
            assert!((l[(i, j)] - l[(j, i)]).abs() <= 1e-9);
            if i != j {
                assert!(l[(i, j)] <= 1e-12);
            }
        }
    }
}

#[test]
fn bundled_spectrum_agrees_with_second_solver() {
    let case = GridCase::ieee24();
    let rn = kron_reduce(&build_laplacian(&case, None).unwrap(), &case.generator_buses()).unwrap();
    let modes = eigendecompose(&rn).unwrap();
    // Second solve on a shifted copy; L + sI has the same eigenvectors.
    let shifted = &rn.laplacian + nalgebra::DMatrix::identity(10, 10) * 3.0;
    let mut other: Vec<f64> = shifted.symmetric_eigenvalues().iter().map(|v| v - 3.0).collect();
    other.sort_by(f64::total_cmp);
    for (a, b) in modes.eigenvalues.iter().zip(&other) {
        assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
    }
    assert!(modes.eigenvalue(2) > 1e-6);
    assert!(modes.eigenvalue(3) - modes.eigenvalue(2) > 1e-6);
}

#[test]
fn local_and_nonlocal_roles_on_bundled_case() {
    let case = GridCase::ieee24();
    let rn = kron_reduce(&build_laplacian(&case, None).unwrap(), &case.generator_buses()).unwrap();
    let modes = eigendecompose(&rn).unwrap();
    let classes = scuc_core::network::classify_buses(&modes, BusId(18)).unwrap();
    assert!(classes.local.contains(&BusId(21)));
    assert!(classes.nonlocal.contains(&BusId(1)));
}

#[test]
fn heterogeneous_coi_rocof_starts_at_aggregate_value() {
    let rn = network(11, 6);
    let inertia = [0.05, 0.2, 0.08, 0.3, 0.12, 0.07];
    let dp = 0.4;
    let dist = Disturbance::new(BusId(3), dp, 0.0).unwrap();
    let opts = SimulationOptions {
        horizon: 0.5,
        rocof_window: 0.001,
        ..Default::default()
    };
    let sim = simulate_swing(&rn, &inertia, &[0.0; 6], &dist, &opts).unwrap();
    let want = dp / (2.0 * PI * inertia.iter().sum::<f64>());
    let got = -sim.coi_rocof[0].unwrap();
    assert!((got - want).abs() <= 0.01 * want, "{got} vs {want}");
}

#[test]
fn zero_loss_keeps_equilibrium() {
    let rn = network(12, 5);
    let dist = Disturbance {
        event_bus: BusId(2),
        power_loss: 0.0,
        inertia_loss: 0.0,
    };
    let sim = simulate_swing(&rn, &[0.1; 5], &[0.3, -0.1, -0.1, 0.2, -0.3], &dist, &SimulationOptions::default())
        .unwrap();
    assert!(sim.freq_deviation.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn bulk_limit_matches_series() {
    let (m, dp, n) = (0.05, 0.1, 10);
    let gamma = 1e-3;
    let dt = 1e-3; // gamma * dt = 1e-6
    let got = rocof_bulk(m, gamma, dp, n, 0.0, dt);
    let limit = dp / (2.0 * PI * n as f64 * m);
    // (1 - e^{-x})/x = 1 - x/2 + x^2/6 - ...
    let x = gamma * dt;
    let series = limit * (1.0 - x / 2.0 + x * x / 6.0);
    assert!((got - series).abs() <= 1e-8 * series);
    assert!((limit - 0.031831).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reduction_of_random_networks(seed in 0u64..10_000, n in 3usize..9, keep in 2usize..9) {
        let rn = network(seed, n);
        let keep = keep.min(n);
        let full = rn.as_laplacian();
        let retained: Vec<BusId> = full.buses[..keep].to_vec();
        let red = kron_reduce(&full, &retained).unwrap();
        red.check_invariants(1e-9).unwrap();
        let modes = eigendecompose(&red).unwrap();
        prop_assert!(modes.eigenvalue(1).abs() <= 1e-9);
        prop_assert!(modes.reconstruction_error(&red.laplacian) <= 1e-9);
        let first: Vec<f64> = (0..keep).map(|i| modes.component(1, i)).collect();
        let c = 1.0 / (keep as f64).sqrt();
        prop_assert!(first.iter().all(|v| (v.abs() - c).abs() <= 1e-9));
    }

    #[test]
    fn rocof_paths_agree_and_scale(
        seed in 0u64..10_000,
        n in 2usize..9,
        scale in 1.2f64..5.0,
        t in 0.0f64..2.0,
        dp in 0.05f64..2.0,
        k in 0.1f64..5.0,
    ) {
        let rn = network(seed, n);
        let m = underdamped_m(&rn, 0.7, scale);
        let modes = eigendecompose(&rn).unwrap();
        let dist = Disturbance::new(rn.retained_buses[seed as usize % n], dp, 0.0).unwrap();
        let scaled = Disturbance { power_loss: k * dp, ..dist };
        for i in 0..n {
            let a = rocof_full(&modes, m, 0.7, &dist, i, t, 0.1).unwrap();
            let b = rocof_full_difference(&modes, m, 0.7, &dist, i, t, 0.1).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            let c = rocof_full(&modes, m, 0.7, &scaled, i, t, 0.1).unwrap();
            prop_assert!((c - k * a).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn higher_modes_cancel_in_equal_sum(seed in 0u64..10_000, n in 2usize..9, t in 0.0f64..2.0) {
        let rn = network(seed, n);
        let m = underdamped_m(&rn, 0.7, 2.0);
        let oracle = ModalOracle::new(&rn.laplacian, m, 0.7);
        let b = seed as usize % n;
        let total: f64 = (0..n)
            .map(|i| (2..=n).map(|a| oracle.mode_deviation(a, 1.0, i, b, t)).sum::<f64>())
            .sum();
        prop_assert!(total.abs() <= 1e-8);
    }

    #[test]
    fn two_mode_is_exact_on_two_buses(w in 0.5f64..5.0, scale in 1.2f64..5.0, t in 0.0f64..1.0) {
        let rn = ReducedNetwork {
            retained_buses: vec![BusId(1), BusId(2)],
            laplacian: nalgebra::DMatrix::from_row_slice(2, 2, &[w, -w, -w, w]),
        };
        let m = underdamped_m(&rn, 0.7, scale);
        let modes = eigendecompose(&rn).unwrap();
        let dist = Disturbance::new(BusId(2), 0.3, 0.0).unwrap();
        for i in 0..2 {
            let two = rocof_two_mode(&modes, m, 0.7, &dist, i, t, 0.1).unwrap();
            let full = rocof_full(&modes, m, 0.7, &dist, i, t, 0.1).unwrap();
            prop_assert!((two - full).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn simulator_matches_modal_solution(seed in 0u64..10_000, n in 2usize..9, scale in 1.5f64..6.0) {
        let rn = network(seed, n);
        let m = underdamped_m(&rn, 0.7, scale);
        let modes = eigendecompose(&rn).unwrap();
        let dist = Disturbance::new(rn.retained_buses[0], 0.2, 0.0).unwrap();
        let opts = SimulationOptions { horizon: 1.0, ..Default::default() };
        let sim = simulate_swing(&rn, &vec![m; n], &vec![0.0; n], &dist, &opts).unwrap();
        for k in (0..sim.time.len()).step_by(50) {
            for i in 0..n {
                let want = nodal_freq_deviation(&modes, m, 0.7, &dist, i, sim.time[k]).unwrap();
                prop_assert!((-sim.freq_deviation[i][k] - want).abs() <= 1e-4);
            }
        }
    }
}
