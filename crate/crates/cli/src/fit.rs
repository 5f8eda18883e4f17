use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use scuc_core::network::{build_laplacian, eigendecompose, kron_reduce};
use scuc_core::pwl::{fit_case_surfaces, BoxSpec, FitOptions, SurfaceSpec};
use scuc_core::{DynamicParams, GridCase, SurfaceSet};

use crate::exit::Status;
use crate::manifest::{create_dir, load_case, write_json, Manifest};
use crate::{CaseArgs, DynamicsArgs};

/// Surrogate fitting options shared by `fit` and `solve`.
#[derive(Args, Debug, Clone, Serialize)]
pub struct SurfaceArgs {
    /// Affine segments per surface.
    #[arg(long, default_value_t = 4)]
    pub segments: usize,
    /// Sample points per axis.
    #[arg(long, default_value_t = 3)]
    pub points: usize,
    /// Random restarts of the fit.
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    /// Skip the shift that makes surfaces over-estimate every sample.
    #[arg(long)]
    pub no_conservative: bool,
    /// Keep the configured lower inertia edge instead of flooring it at the inter-area
    /// half-period.
    #[arg(long)]
    pub no_phase_floor: bool,
}

impl SurfaceArgs {
    pub fn spec(&self, seed: u64) -> SurfaceSpec {
        SurfaceSpec {
            segments: self.segments,
            conservative: !self.no_conservative,
            fit: FitOptions {
                restarts: self.restarts,
                seed,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub fn bounds(&self) -> BoxSpec {
        BoxSpec {
            points_per_axis: self.points,
            phase_floor: !self.no_phase_floor,
            ..Default::default()
        }
    }
}

pub fn dynamic_params(d: &DynamicsArgs, f0: f64) -> DynamicParams {
    DynamicParams {
        gamma: d.gamma,
        dt: d.dt,
        t1: d.t1,
        t2: d.t2,
        f0,
    }
}

/// Surfaces for every generator bus of `case`.
pub fn fit_surfaces(case: &GridCase, params: &DynamicParams, s: &SurfaceArgs, seed: u64) -> Result<SurfaceSet> {
    let retained = case.generator_buses();
    let reduced = kron_reduce(&build_laplacian(case, None)?, &retained)?;
    let modes = eigendecompose(&reduced)?;
    Ok(fit_case_surfaces(case, &modes, params, &s.bounds(), &s.spec(seed))?)
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    #[command(flatten)]
    pub surfaces: SurfaceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out/surfaces")]
    pub out: PathBuf,
}

pub fn run(args: &FitArgs) -> Result<Status> {
    let (case, input) = load_case(&args.case)?;
    let mut manifest = Manifest::new("fit", args)?;
    manifest.inputs.insert("case".into(), input);
    create_dir(&args.out)?;
    let params = dynamic_params(&args.dynamics, case.f0);
    let set = manifest.step("fit", || fit_surfaces(&case, &params, &args.surfaces, args.seed))?;
    set.save(args.out.join("surfaces.json"))?;
    for (bus, pair) in &set.by_event_bus {
        write_json(&args.out.join(format!("surface_b{bus}_local.json")), &pair.local)?;
        write_json(&args.out.join(format!("surface_b{bus}_nonlocal.json")), &pair.nonlocal)?;
        println!(
            "bus {bus}: local rmse {:.4} shift {:.4}; non-local rmse {:.4} shift {:.4}",
            pair.local.fit_report.rmse,
            pair.local.fit_report.conservative_shift,
            pair.nonlocal.fit_report.rmse,
            pair.nonlocal.fit_report.conservative_shift
        );
    }
    manifest.write(&args.out)?;
    Ok(Status::Success)
}
