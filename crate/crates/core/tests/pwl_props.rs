mod common;

use proptest::prelude::*;

use common::brute_force_objective;
use scuc_core::pwl::{
    eval_pwl, eval_segment, eval_segments, fit_pwl, make_conservative, restart_trace, FitOptions,
    FitProblem, Sample, Segment,
};

fn segment() -> impl Strategy<Value = Segment> {
    prop::array::uniform4(-3.0f64..3.0)
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-2.0f64..2.0)
}

/// Samples of a smooth convex bowl on a jittered 3-D lattice.
fn bowl(seed: u64, count: usize) -> Vec<Sample> {
    (0..count)
        .map(|k| {
            let j = (k as u64).wrapping_mul(2654435761).wrapping_add(seed) % 1000;
            let x = [
                (k % 5) as f64 * 0.5 + j as f64 * 1e-4,
                (k / 5 % 3) as f64 * 0.4 + 0.2,
                (k / 15) as f64 * 0.1,
            ];
            Sample {
                x,
                value: x[0] * x[0] + 0.5 * (x[1] - 0.5).powi(2) + 0.3 * x[2],
            }
        })
        .collect()
}

#[test]
fn brute_force_oracle_on_absolute_value() {
    let samples: Vec<Sample> = (0..=10)
        .map(|k| {
            let x = -1.0 + 0.2 * k as f64;
            Sample { x: [x, 0.5, 0.1], value: x.abs() }
        })
        .collect();
    let oracle = brute_force_objective(&samples, 2);
    assert!(oracle <= 1e-20);
    let fit = fit_pwl(&FitProblem::new(samples, 2).unwrap(), &FitOptions::default()).unwrap();
    assert!(fit.fit_report.objective <= oracle + 1e-8);
}

#[test]
fn heuristic_reaches_enumerated_optimum_on_small_bowls() {
    for seed in 0..4 {
        let samples = bowl(seed, 10);
        let oracle = brute_force_objective(&samples, 2);
        let fit = fit_pwl(&FitProblem::new(samples, 2).unwrap(), &FitOptions::default()).unwrap();
        assert!(
            fit.fit_report.objective <= oracle + 1e-8,
            "seed {seed}: {} vs {oracle}",
            fit.fit_report.objective
        );
    }
}

#[test]
fn conservative_shift_examples() {
    let segs = vec![[1.0, 0.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]];
    assert_eq!(eval_segments(&segs, &[0.5, 0.0, 0.0]), 0.5);
    assert_eq!(eval_segments(&segs, &[0.0, 0.0, 0.0]), 0.0);

    let samples: Vec<Sample> = (0..=10)
        .map(|k| {
            let x = -1.0 + 0.2 * k as f64;
            Sample { x: [x, 0.0, 0.0], value: x.abs() }
        })
        .collect();
    let mut surface = fit_pwl(&FitProblem::new(samples.clone(), 2).unwrap(), &FitOptions::default()).unwrap();
    let exact = make_conservative(&surface, &samples);
    assert!(exact.fit_report.conservative_shift <= 1e-12);

    surface.segments = segs.clone();
    let untouched = make_conservative(&surface, &samples);
    assert_eq!(untouched.segments, segs);

    let mut lifted = samples;
    lifted[5].value += 0.01;
    let shifted = make_conservative(&surface, &lifted);
    for (a, b) in shifted.segments.iter().zip(&segs) {
        assert!((a[3] - b[3] - 0.01).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn max_affine_is_convex(
        segs in prop::collection::vec(segment(), 1..6),
        x in point(),
        y in point(),
        lambda in 0.0f64..1.0,
    ) {
        let mid: [f64; 3] = std::array::from_fn(|j| lambda * x[j] + (1.0 - lambda) * y[j]);
        let lhs = eval_segments(&segs, &mid);
        let rhs = lambda * eval_segments(&segs, &x) + (1.0 - lambda) * eval_segments(&segs, &y);
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn max_affine_dominates_each_segment(segs in prop::collection::vec(segment(), 1..6), x in point()) {
        let v = eval_segments(&segs, &x);
        prop_assert!(segs.iter().all(|s| eval_segment(s, &x) <= v));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fits_are_conservative_and_monotone(seed in 0u64..1000, k in 2usize..5) {
        let samples = bowl(seed, 30);
        let p = FitProblem::new(samples.clone(), k).unwrap();
        let opts = FitOptions { restarts: 4, seed, ..Default::default() };
        let fit = fit_pwl(&p, &opts).unwrap();
        let safe = make_conservative(&fit, &samples);
        prop_assert!(samples.iter().all(|s| eval_pwl(&safe, &s.x) >= s.value));
        prop_assert!(safe.fit_report.conservative_shift >= 0.0);
        if let Some(trace) = restart_trace(&p, seed, &opts) {
            prop_assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
