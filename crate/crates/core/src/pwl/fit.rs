//! Multi-start clusterwise regression for max-of-affine fits.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eval_segments, PwlSurface, Sample, Segment};
use crate::error::{Error, Result};

/// Fewest samples a segment may own; an affine form in three variables has four parameters.
pub const MIN_SEGMENT_SAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitProblem {
    pub samples: Vec<Sample>,
    pub segments: usize,
    /// Big-M constant of the mixed-integer form; kept for export, unused by the heuristic.
    pub big_m: f64,
}

impl FitProblem {
    /// Problem with `big_m` set to ten times the sample spread (plus one).
    pub fn new(samples: Vec<Sample>, segments: usize) -> Result<Self> {
        let (lo, hi) = value_range(&samples);
        let p = Self {
            samples,
            segments,
            big_m: 10.0 * (hi - lo) + 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments < 2 {
            return Err(Error::validation("at least 2 segments"));
        }
        if self.samples.len() < MIN_SEGMENT_SAMPLES * self.segments {
            return Err(Error::validation(format!(
                "at least {} samples for {} segments",
                MIN_SEGMENT_SAMPLES * self.segments,
                self.segments
            )));
        }
        if self
            .samples
            .iter()
            .any(|s| !s.value.is_finite() || s.x.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::validation("samples are finite"));
        }
        let (lo, hi) = value_range(&self.samples);
        if !(self.big_m > hi - lo) {
            return Err(Error::validation("big-M exceeds the sample value spread"));
        }
        Ok(())
    }

    /// Sum of squared errors of `segments` over the samples.
    pub fn objective(&self, segments: &[Segment]) -> f64 {
        self.samples
            .iter()
            .map(|s| (eval_segments(segments, &s.x) - s.value).powi(2))
            .sum()
    }
}

fn value_range(samples: &[Sample]) -> (f64, f64) {
    samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s.value), hi.max(s.value))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Single-sample moves and pairwise swaps after the alternation converges; only applied
    /// to problems with at most 200 samples and 4 segments.
    pub polish: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 0,
            max_iterations: 200,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub objective: f64,
    pub rmse: f64,
    /// Error `surrogate - value` of largest magnitude, with its sign.
    pub max_signed_error: f64,
    pub conservative_shift: f64,
    pub samples: usize,
    pub restarts: usize,
    pub degenerate_restarts: usize,
    pub best_restart: usize,
    /// Objective after each accepted step of the winning restart.
    pub objective_trace: Vec<f64>,
}

impl FitReport {
    pub(crate) fn errors(segments: &[Segment], samples: &[Sample]) -> (f64, f64) {
        let mut sse = 0.0;
        let mut worst = 0.0_f64;
        for s in samples {
            let e = eval_segments(segments, &s.x) - s.value;
            sse += e * e;
            if e.abs() > worst.abs() {
                worst = e;
            }
        }
        ((sse / samples.len() as f64).sqrt(), worst)
    }
}

/// Affine map of each feature onto roughly [-1, 1].
struct Scaler {
    center: [f64; 3],
    scale: [f64; 3],
}

impl Scaler {
    fn new(samples: &[Sample]) -> Self {
        let mut center = [0.0; 3];
        let mut scale = [1.0; 3];
        for j in 0..3 {
            let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.x[j]), hi.max(s.x[j]))
            });
            center[j] = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            scale[j] = if half > 0.0 { half } else { 1.0 };
        }
        Self { center, scale }
    }

    fn row(&self, x: &[f64; 3]) -> [f64; 4] {
        [
            (x[0] - self.center[0]) / self.scale[0],
            (x[1] - self.center[1]) / self.scale[1],
            (x[2] - self.center[2]) / self.scale[2],
            1.0,
        ]
    }

    fn to_original(&self, s: &Segment) -> Segment {
        let a: [f64; 3] = std::array::from_fn(|j| s[j] / self.scale[j]);
        let d = s[3] - (0..3).map(|j| a[j] * self.center[j]).sum::<f64>();
        [a[0], a[1], a[2], d]
    }
}

/// Normalized data shared by all restarts.
struct Work {
    z: Vec<[f64; 4]>,
    y: Vec<f64>,
    k: usize,
}

impl Work {
    fn value(seg: &Segment, z: &[f64; 4]) -> f64 {
        seg[0] * z[0] + seg[1] * z[1] + seg[2] * z[2] + seg[3] * z[3]
    }

    fn objective(&self, segs: &[Segment]) -> f64 {
        self.z
            .iter()
            .zip(&self.y)
            .map(|(z, y)| {
                let v = segs.iter().map(|s| Self::value(s, z)).fold(f64::NEG_INFINITY, f64::max);
                (v - y).powi(2)
            })
            .sum()
    }

    /// Least-squares (minimum-norm when rank deficient) affine fit on the members of `v`.
    fn fit_group(&self, assign: &[usize], v: usize) -> Option<Segment> {
        let rows: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] == v).collect();
        if rows.len() < MIN_SEGMENT_SAMPLES {
            return None;
        }
        let a = DMatrix::from_fn(rows.len(), 4, |r, c| self.z[rows[r]][c]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        let svd = a.svd(true, true);
        let eps = 1e-12 * svd.singular_values.max();
        let sol = svd.solve(&b, eps).ok()?;
        let seg = [sol[0], sol[1], sol[2], sol[3]];
        seg.iter().all(|v| v.is_finite()).then_some(seg)
    }

    fn fit_all(&self, assign: &[usize]) -> Option<Vec<Segment>> {
        (0..self.k).map(|v| self.fit_group(assign, v)).collect()
    }

    /// Each sample goes to a maximizing segment, staying put when its current one ties.
    fn reassign(&self, segs: &[Segment], current: &[usize]) -> Vec<usize> {
        self.z
            .iter()
            .zip(current)
            .map(|(z, &cur)| {
                let vals: Vec<f64> = segs.iter().map(|s| Self::value(s, z)).collect();
                let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let tol = 1e-12 * (1.0 + best.abs());
                if vals[cur] >= best - tol {
                    cur
                } else {
                    vals.iter().position(|v| *v >= best - tol).unwrap_or(cur)
                }
            })
            .collect()
    }

    fn counts(&self, assign: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &a in assign {
            c[a] += 1;
        }
        c
    }
}

struct RestartOutcome {
    segments: Vec<Segment>,
    objective: f64,
    trace: Vec<f64>,
}

fn improves(new: f64, old: f64) -> bool {
    new < old - 1e-13 * old.abs().max(1e-300)
}

fn run_restart(work: &Work, seed: u64, opts: &FitOptions, polish: bool) -> Option<RestartOutcome> {
    let n = work.y.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut assign = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assign[i] = pos % work.k;
    }
    let mut segs = work.fit_all(&assign)?;
    let mut obj = work.objective(&segs);
    let mut trace = vec![obj];

    for _ in 0..opts.max_iterations {
        let next = work.reassign(&segs, &assign);
        if next == assign {
            break;
        }
        // Starvation ends the alternation; the best iterate so far is kept.
        if work.counts(&next).iter().any(|&c| c < MIN_SEGMENT_SAMPLES) {
            break;
        }
        let Some(next_segs) = work.fit_all(&next) else {
            break;
        };
        let next_obj = work.objective(&next_segs);
        if next_obj > obj {
            break;
        }
        assign = next;
        segs = next_segs;
        obj = next_obj;
        trace.push(obj);
    }

    if polish {
        polish_assignment(work, &mut assign, &mut segs, &mut obj, &mut trace);
    }
    Some(RestartOutcome {
        segments: segs,
        objective: obj,
        trace,
    })
}

/// Local search over assignments: move one sample to another segment, or swap two samples
/// between segments, refitting the affected groups; repeat until no move improves.
fn polish_assignment(
    work: &Work,
    assign: &mut Vec<usize>,
    segs: &mut Vec<Segment>,
    obj: &mut f64,
    trace: &mut Vec<f64>,
) {
    let n = assign.len();
    let try_candidate = |cand: &[usize], groups: &[usize], segs: &[Segment]| -> Option<(Vec<Segment>, f64)> {
        let mut next = segs.to_vec();
        for &g in groups {
            next[g] = work.fit_group(cand, g)?;
        }
        let o = work.objective(&next);
        Some((next, o))
    };
    loop {
        let mut improved = false;
        let mut counts = work.counts(assign);
        for i in 0..n {
            for v in 0..work.k {
                let from = assign[i];
                if v == from || counts[from] <= MIN_SEGMENT_SAMPLES {
                    continue;
                }
                let mut cand = assign.clone();
                cand[i] = v;
                if let Some((next, o)) = try_candidate(&cand, &[from, v], segs) {
                    if improves(o, *obj) {
                        *assign = cand;
                        *segs = next;
                        *obj = o;
                        trace.push(o);
                        counts[from] -= 1;
                        counts[v] += 1;
                        improved = true;
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (gi, gj) = (assign[i], assign[j]);
                if gi == gj {
                    continue;
                }
                let mut cand = assign.clone();
                cand.swap(i, j);
                if let Some((next, o)) = try_candidate(&cand, &[gi, gj], segs) {
                    if improves(o, *obj) {
                        *assign = cand;
                        *segs = next;
                        *obj = o;
                        trace.push(o);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Best-of-restarts max-of-affine least-squares fit.
pub fn fit_pwl(problem: &FitProblem, opts: &FitOptions) -> Result<PwlSurface> {
    problem.validate()?;
    if opts.restarts == 0 {
        return Err(Error::validation("at least one restart"));
    }
    let scaler = Scaler::new(&problem.samples);
    let work = Work {
        z: problem.samples.iter().map(|s| scaler.row(&s.x)).collect(),
        y: problem.samples.iter().map(|s| s.value).collect(),
        k: problem.segments,
    };
    let polish = opts.polish && problem.samples.len() <= 200 && problem.segments <= 4;
    let outcomes: Vec<Option<RestartOutcome>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| run_restart(&work, opts.seed.wrapping_add(r as u64), opts, polish))
        .collect();

    let degenerate = outcomes.iter().filter(|o| o.is_none()).count();
    let (best_restart, best) = outcomes
        .iter()
        .enumerate()
        .filter_map(|(r, o)| o.as_ref().map(|o| (r, o)))
        .fold(None::<(usize, &RestartOutcome)>, |acc, (r, o)| match acc {
            Some((_, b)) if b.objective <= o.objective => acc,
            _ => Some((r, o)),
        })
        .ok_or(Error::FitDegenerate {
            restarts: opts.restarts,
        })?;

    let segments: Vec<Segment> = best.segments.iter().map(|s| scaler.to_original(s)).collect();
    let (rmse, max_signed_error) = FitReport::errors(&segments, &problem.samples);
    let report = FitReport {
        objective: problem.objective(&segments),
        rmse,
        max_signed_error,
        conservative_shift: 0.0,
        samples: problem.samples.len(),
        restarts: opts.restarts,
        degenerate_restarts: degenerate,
        best_restart,
        objective_trace: best.trace.clone(),
    };
    log::debug!(
        "pwl fit: {} samples, {} segments, objective {:.3e} (restart {best_restart})",
        problem.samples.len(),
        problem.segments,
        report.objective
    );
    Ok(PwlSurface {
        segments,
        context: None,
        fit_report: report,
    })
}

/// Objective-per-step trace of a single restart; used to check monotonicity.
pub fn restart_trace(problem: &FitProblem, seed: u64, opts: &FitOptions) -> Option<Vec<f64>> {
    let scaler = Scaler::new(&problem.samples);
    let work = Work {
        z: problem.samples.iter().map(|s| scaler.row(&s.x)).collect(),
        y: problem.samples.iter().map(|s| s.value).collect(),
        k: problem.segments,
    };
    run_restart(&work, seed, opts, opts.polish).map(|o| o.trace)
}
