use std::path::PathBuf;

use crate::network::BusId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    /// A domain invariant does not hold. The message names the invariant.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unknown bus {0}")]
    UnknownBus(BusId),

    #[error("eliminated block of the Laplacian is singular (an eliminated island has no path to a retained bus)")]
    SingularElimination,

    #[error("symmetric eigensolver did not converge for a {0}x{0} matrix")]
    EigenNonConvergence(usize),

    #[error("Fiedler eigenvalue is degenerate: lambda_2 = {lambda2}, lambda_3 = {lambda3}")]
    DegenerateFiedler { lambda2: f64, lambda3: f64 },

    #[error("mode {mode} is not underdamped: lambda/m = {ratio}, gamma^2/4 = {threshold}")]
    Overdamped {
        mode: usize,
        ratio: f64,
        threshold: f64,
    },

    #[error("inertia collapse: post-contingency inertia m - dm = {m} - {dm} is not positive")]
    InertiaCollapse { m: f64, dm: f64 },

    #[error("grid point (dP={delta_p}, m={inertia}, dm={inertia_loss}) is outside the valid region: {reason}")]
    InvalidGridPoint {
        delta_p: f64,
        inertia: f64,
        inertia_loss: f64,
        reason: String,
    },

    #[error("piecewise-linear fit failed: every one of {restarts} restarts was degenerate")]
    FitDegenerate { restarts: usize },

    #[error("initial injections are not an equilibrium: residual {residual:e}")]
    NotEquilibrium { residual: f64 },

    #[error("integration became unstable at t = {time}s (energy grew by {growth:e})")]
    StepUnstable { time: f64, growth: f64 },

    #[error("no RoCoF surface available for contingencies on bus {0}")]
    MissingSurface(BusId),

    #[error("solver backend `{backend}` failed: {status}")]
    Backend { backend: String, status: String },

    #[error("pricing LP infeasible after fixing the commitment: {report}")]
    PricingInfeasible { report: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
