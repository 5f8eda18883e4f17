//! Oracles and fixtures shared by the integration tests. Nothing here calls into the code
//! it is used to check.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use scuc_core::pwl::Sample;
use scuc_core::{BusId, ReducedNetwork};

/// Random connected weighted graph on `n` buses: a random spanning tree plus extra edges.
pub fn random_network(rng: &mut impl Rng, n: usize) -> ReducedNetwork {
    let mut l = DMatrix::zeros(n, n);
    let add = |l: &mut DMatrix<f64>, a: usize, b: usize, w: f64| {
        l[(a, a)] += w;
        l[(b, b)] += w;
        l[(a, b)] -= w;
        l[(b, a)] -= w;
    };
    for i in 1..n {
        let j = rng.random_range(0..i);
        add(&mut l, i, j, rng.random_range(0.5..3.0));
    }
    for _ in 0..n / 2 {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            add(&mut l, a, b, rng.random_range(0.5..3.0));
        }
    }
    ReducedNetwork {
        retained_buses: (1..=n as u32).map(BusId).collect(),
        laplacian: l,
    }
}

/// Homogeneous-inertia modal response to a step injection, built from its own symmetric
/// eigendecomposition. Deviations are rad/s, RoCoF terms Hz/s.
pub struct ModalOracle {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    m: f64,
    gamma: f64,
}

impl ModalOracle {
    pub fn new(laplacian: &DMatrix<f64>, m: f64, gamma: f64) -> Self {
        let eig = laplacian.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(order.len(), order.iter().map(|&k| eig.eigenvalues[k]));
        let vectors = DMatrix::from_fn(order.len(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors, m, gamma }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalue(&self, mode: usize) -> f64 {
        self.values[mode - 1]
    }

    pub fn omega(&self, mode: usize) -> f64 {
        (self.values[mode - 1] / self.m - self.gamma * self.gamma / 4.0).sqrt()
    }

    /// Contribution of `mode` (1-based) to the frequency deviation at bus `i`.
    pub fn mode_deviation(&self, mode: usize, dp: f64, i: usize, b: usize, t: f64) -> f64 {
        let n = self.len() as f64;
        let (m, g) = (self.m, self.gamma);
        if mode == 1 {
            return dp * (1.0 - (-g * t).exp()) / (n * m * g);
        }
        let c = self.vectors[(i, mode - 1)] * self.vectors[(b, mode - 1)];
        let w = self.omega(mode);
        dp * c * (-g * t / 2.0).exp() * (w * t).sin() / (m * w)
    }

    pub fn deviation(&self, dp: f64, i: usize, b: usize, t: f64) -> f64 {
        (1..=self.len()).map(|a| self.mode_deviation(a, dp, i, b, t)).sum()
    }

    /// Windowed RoCoF contribution of `mode`, Hz/s.
    pub fn mode_rocof(&self, mode: usize, dp: f64, i: usize, b: usize, t: f64, dt: f64) -> f64 {
        (self.mode_deviation(mode, dp, i, b, t + dt) - self.mode_deviation(mode, dp, i, b, t))
            / (2.0 * PI * dt)
    }
}

/// Minimum max-of-affine squared error over every split of `samples` into `k` groups of at
/// least four, each group refitted by minimum-norm least squares on box-scaled features.
pub fn brute_force_objective(samples: &[Sample], k: usize) -> f64 {
    const MIN: usize = 4;
    let n = samples.len();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for s in samples {
        for j in 0..3 {
            lo[j] = lo[j].min(s.x[j]);
            hi[j] = hi[j].max(s.x[j]);
        }
    }
    let rows: Vec<[f64; 4]> = samples
        .iter()
        .map(|s| {
            let f = |j: usize| {
                let half = 0.5 * (hi[j] - lo[j]);
                if half > 0.0 {
                    (s.x[j] - 0.5 * (lo[j] + hi[j])) / half
                } else {
                    s.x[j] - 0.5 * (lo[j] + hi[j])
                }
            };
            [f(0), f(1), f(2), 1.0]
        })
        .collect();
    let y: Vec<f64> = samples.iter().map(|s| s.value).collect();

    let fit = |members: &[usize]| -> Option<[f64; 4]> {
        let a = DMatrix::from_fn(members.len(), 4, |r, c| rows[members[r]][c]);
        let b = DVector::from_iterator(members.len(), members.iter().map(|&i| y[i]));
        let svd = a.svd(true, true);
        let eps = 1e-12 * svd.singular_values.max();
        let x = svd.solve(&b, eps).ok()?;
        Some([x[0], x[1], x[2], x[3]])
    };
    let score = |segs: &[[f64; 4]]| -> f64 {
        rows.iter()
            .zip(&y)
            .map(|(z, y)| {
                let v = segs
                    .iter()
                    .map(|s| s.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                (v - y).powi(2)
            })
            .sum()
    };

    // Enumerate labellings where sample i may only open label max_used + 1.
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    fn walk(
        i: usize,
        used: usize,
        k: usize,
        labels: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        let n = labels.len();
        let mut counts = vec![0usize; k];
        for &l in &labels[..i] {
            counts[l] += 1;
        }
        let missing: usize = (0..k).map(|v| MIN.saturating_sub(counts[v])).sum();
        if missing > n - i {
            return;
        }
        if i == n {
            visit(labels);
            return;
        }
        for v in 0..(used + 1).min(k) {
            labels[i] = v;
            walk(i + 1, used.max(v + 1), k, labels, visit);
        }
    }
    walk(0, 0, k, &mut labels, &mut |labels| {
        let segs: Option<Vec<[f64; 4]>> = (0..k)
            .map(|v| {
                let members: Vec<usize> = (0..n).filter(|&i| labels[i] == v).collect();
                fit(&members)
            })
            .collect();
        if let Some(segs) = segs {
            best = best.min(score(&segs));
        }
    });
    best
}
