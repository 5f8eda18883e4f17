use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use scuc_core::dynamics::{rocof_full, simulate_swing, Disturbance, SimulationOptions};
use scuc_core::lp::backend_from_env;
use scuc_core::network::{build_laplacian, eigendecompose, kron_reduce};
use scuc_core::pwl::{fit_pwl, sample_surface, EvaluationGrid, FitOptions, FitProblem};
use scuc_core::scuc::{build_model, solve};
use scuc_core::{BusId, GridCase, ModelKind, ScucConfig};

fn network(c: &mut Criterion) {
    let case = GridCase::ieee24();
    let buses = case.generator_buses();
    c.bench_function("kron_reduce_and_eigendecompose", |b| {
        b.iter(|| {
            let rn = kron_reduce(&build_laplacian(black_box(&case), None).unwrap(), &buses).unwrap();
            eigendecompose(&rn).unwrap()
        })
    });
}

fn dynamics(c: &mut Criterion) {
    let case = GridCase::ieee24();
    let rn = kron_reduce(&build_laplacian(&case, None).unwrap(), &case.generator_buses()).unwrap();
    let modes = eigendecompose(&rn).unwrap();
    let dist = Disturbance::new(BusId(18), 4.0, 0.0).unwrap();
    c.bench_function("rocof_full_all_buses", |b| {
        b.iter(|| {
            (0..modes.len())
                .map(|i| rocof_full(&modes, 0.1, 0.7, &dist, i, black_box(0.4), 0.1).unwrap())
                .sum::<f64>()
        })
    });
    let opts = SimulationOptions { horizon: 1.0, ..Default::default() };
    let inertia = vec![0.1; rn.len()];
    let zero = vec![0.0; rn.len()];
    c.bench_function("simulate_swing_1s", |b| {
        b.iter(|| simulate_swing(&rn, &inertia, &zero, black_box(&dist), &opts).unwrap())
    });
}

fn pwl(c: &mut Criterion) {
    let case = GridCase::ieee24();
    let rn = kron_reduce(&build_laplacian(&case, None).unwrap(), &case.generator_buses()).unwrap();
    let modes = eigendecompose(&rn).unwrap();
    let grid = EvaluationGrid::for_case(&case, modes.len(), 3).unwrap();
    let i = modes.position(BusId(21)).unwrap();
    let e = modes.position(BusId(18)).unwrap();
    let samples = sample_surface(&modes, i, e, 0.0, 0.1, 0.7, &grid).unwrap();
    let problem = FitProblem::new(samples, 4).unwrap();
    c.bench_function("fit_pwl_27_samples_16_restarts", |b| {
        b.iter(|| fit_pwl(black_box(&problem), &FitOptions::default()).unwrap())
    });
}

fn scheduling(c: &mut Criterion) {
    let case = GridCase::ieee24().with_penetration(0.6).unwrap();
    let cfg = ScucConfig::default();
    c.bench_function("build_erc_model_24h", |b| {
        b.iter(|| build_model(black_box(&case), ModelKind::Erc, &cfg, None).unwrap())
    });
    let window = case.window(10, 2).unwrap();
    let problem = build_model(&window, ModelKind::T, &cfg, None).unwrap();
    let backend = backend_from_env().unwrap();
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    group.bench_function("t_model_2h", |b| b.iter(|| solve(&problem, backend.as_ref()).unwrap()));
    group.finish();
}

criterion_group!(benches, network, dynamics, pwl, scheduling);
criterion_main!(benches);
