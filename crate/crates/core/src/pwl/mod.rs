//! Max-of-affine surrogates of the two-mode nodal RoCoF function over (dP, m, dm).

mod fit;
mod grid;
mod surface;

pub use fit::*;
pub use grid::*;
pub use surface::*;

use serde::{Deserialize, Serialize};

/// One training point: `x = (dP p.u., m, dm)` and the RoCoF value (Hz/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: [f64; 3],
    pub value: f64,
}

/// `[a, b, c, d]` evaluates to `a*dP + b*m + c*dm + d`.
pub type Segment = [f64; 4];

pub fn eval_segment(s: &Segment, x: &[f64; 3]) -> f64 {
    s[0] * x[0] + s[1] * x[1] + s[2] * x[2] + s[3]
}

/// Maximum over the affine segments.
pub fn eval_segments(segments: &[Segment], x: &[f64; 3]) -> f64 {
    segments
        .iter()
        .map(|s| eval_segment(s, x))
        .fold(f64::NEG_INFINITY, f64::max)
}
