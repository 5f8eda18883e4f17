use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use scuc_core::lp::{backend_from_env, SolveStatus};
use scuc_core::scuc::{build_model, solve, summarize_inertia, write_inertia_csv};
use scuc_core::{GridCase, ModelKind, ScucConfig, SurfaceSet, UcSolution};

use crate::exit::Status;
use crate::fit::{dynamic_params, fit_surfaces, SurfaceArgs};
use crate::manifest::{create_dir, hash_file, load_case, write_json, Manifest};
use crate::{CaseArgs, DynamicsArgs};

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Model kinds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "t,erc,lrc,vi-erc,vi-lrc")]
    pub models: Vec<ModelKind>,
    /// RoCoF limit (Hz/s).
    #[arg(long, default_value_t = 0.5)]
    pub rocof_lim: f64,
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Renewable penetration scales (peak-hour renewables over peak load), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.6")]
    pub penetration: Vec<f64>,
    /// First hour of the scheduling window (1-based).
    #[arg(long, default_value_t = 1)]
    pub first_hour: usize,
    /// Hours in the scheduling window; the rest of the case when omitted.
    #[arg(long)]
    pub hours: Option<usize>,
    /// Virtual inertia available per hour (MWs).
    #[arg(long, default_value_t = 2000.0)]
    pub vi_budget: f64,
    /// Virtual inertia price ($/MWs per hour); derived from the fleet when omitted.
    #[arg(long)]
    pub vi_price: Option<f64>,
    /// Relative MIP gap.
    #[arg(long, default_value_t = 1e-3)]
    pub gap: f64,
    /// Seconds per model.
    #[arg(long, default_value_t = 1800.0)]
    pub time_limit: f64,
    /// Solver threads per model.
    #[arg(long, default_value_t = 1)]
    pub threads: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave the tripped unit's own reserve out of the G-1 reserve requirement.
    #[arg(long)]
    pub reserve_excludes_self: bool,
    /// Pre-fitted surface set; fitted on the fly when omitted and a locational kind is requested.
    #[arg(long)]
    pub surfaces: Option<PathBuf>,
    #[command(flatten)]
    pub fit: SurfaceArgs,
    #[arg(long, default_value = "out/solve")]
    pub out: PathBuf,
}

impl SolveArgs {
    pub fn config(&self) -> ScucConfig {
        ScucConfig {
            rocof_lim: self.rocof_lim,
            gamma: self.dynamics.gamma,
            dt: self.dynamics.dt,
            t1: self.dynamics.t1,
            t2: self.dynamics.t2,
            vi_price: self.vi_price,
            vi_budget: self.vi_budget,
            mip_gap: self.gap,
            time_limit: self.time_limit,
            threads: self.threads,
            seed: self.seed,
            reserve_excludes_self: self.reserve_excludes_self,
        }
    }
}

/// Directory of one penetration scenario inside a solve run.
pub fn scenario_dir(out: &Path, penetration: f64) -> PathBuf {
    out.join(format!("pen-{penetration:.2}"))
}

struct Outcome {
    penetration: f64,
    kind: ModelKind,
    result: scuc_core::Result<UcSolution>,
    wall_time: f64,
}

pub fn run(args: &SolveArgs) -> Result<Status> {
    let (base, input) = load_case(&args.case)?;
    let mut manifest = Manifest::new("solve", args)?;
    manifest.inputs.insert("case".into(), input);
    let cfg = args.config();
    cfg.validate()?;
    if args.models.is_empty() || args.penetration.is_empty() {
        anyhow::bail!("at least one model kind and one penetration scale");
    }
    create_dir(&args.out)?;
    let backend = backend_from_env()?;
    manifest.backend = Some(backend.identity());
    manifest.deterministic_backend = Some(backend.deterministic());

    let surfaces = if args.models.iter().any(|k| k.needs_surfaces()) {
        let set = match &args.surfaces {
            Some(path) => {
                manifest.inputs.insert("surfaces".into(), hash_file(path)?);
                SurfaceSet::load(path)?
            }
            None => {
                let params = dynamic_params(&args.dynamics, base.f0);
                manifest.step("fit", || fit_surfaces(&base, &params, &args.fit, args.seed))?
            }
        };
        set.save(args.out.join("surfaces.json"))?;
        Some(set)
    } else {
        None
    };

    let mut scenarios = Vec::new();
    for &pen in &args.penetration {
        let case = scenario_case(&base, pen, args.first_hour, args.hours)?;
        let dir = scenario_dir(&args.out, pen);
        create_dir(&dir)?;
        std::fs::write(dir.join("case.json"), case.to_json_string()? + "\n")?;
        write_json(&dir.join("config.json"), &cfg)?;
        if let Some(set) = &surfaces {
            set.save(dir.join("surfaces.json"))?;
        }
        scenarios.push((pen, case));
    }

    let jobs: Vec<(f64, &GridCase, ModelKind)> = scenarios
        .iter()
        .flat_map(|(pen, case)| args.models.iter().map(move |&k| (*pen, case, k)))
        .collect();
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(penetration, case, kind)| {
            let start = Instant::now();
            let result = backend_from_env().and_then(|backend| {
                log::info!("solving {kind} at penetration {penetration}");
                let problem = build_model(case, kind, &cfg, surfaces.as_ref())?;
                solve(&problem, backend.as_ref())
            });
            Outcome {
                penetration,
                kind,
                result,
                wall_time: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut status = Status::Success;
    let mut rows = Vec::new();
    for o in &outcomes {
        manifest.steps.push(crate::manifest::Step {
            name: format!("solve pen-{:.2} {}", o.penetration, o.kind),
            wall_time: o.wall_time,
        });
        let (_, case) = scenarios
            .iter()
            .find(|(p, _)| *p == o.penetration)
            .expect("scenario exists");
        let dir = scenario_dir(&args.out, o.penetration).join(o.kind.name());
        match &o.result {
            Ok(sol) => {
                write_solution(&dir, case, sol)?;
                let s = match sol.status {
                    SolveStatus::Optimal | SolveStatus::TimeLimit => Status::Success,
                    SolveStatus::Infeasible | SolveStatus::TimeLimitNoSolution => Status::Infeasible,
                    SolveStatus::Unbounded => Status::Backend,
                };
                if s != Status::Success {
                    log::warn!("{} at penetration {}: {:?}", o.kind, o.penetration, sol.status);
                }
                status = status.max(s);
                rows.push(CostRow::new(o.penetration, sol));
            }
            Err(e) => {
                log::error!("{} at penetration {}: {e}", o.kind, o.penetration);
                status = status.max(crate::exit::status_for(e));
            }
        }
    }
    for &pen in &args.penetration {
        let mine: Vec<&CostRow> = rows.iter().filter(|r| r.penetration == pen).collect();
        write_costs(&scenario_dir(&args.out, pen).join("costs.csv"), &mine)?;
    }
    write_costs(&args.out.join("sweep.csv"), &rows.iter().collect::<Vec<_>>())?;
    for r in &rows {
        println!(
            "pen {:.2} {:7} {:?} total {:.1} gap {:.2e}",
            r.penetration, r.model, r.status, r.total, r.mip_gap
        );
    }
    manifest.write(&args.out)?;
    Ok(status)
}

/// Bundled-style scenario: penetration scaling first, then the hour window.
pub fn scenario_case(base: &GridCase, penetration: f64, first_hour: usize, hours: Option<usize>) -> Result<GridCase> {
    let scaled = base.with_penetration(penetration)?;
    if first_hour == 0 {
        anyhow::bail!("first hour is 1-based");
    }
    let start = first_hour - 1;
    let len = hours.unwrap_or(scaled.horizon().saturating_sub(start));
    Ok(scaled.window(start, len)?)
}

fn write_solution(dir: &Path, case: &GridCase, sol: &UcSolution) -> Result<()> {
    create_dir(dir)?;
    sol.save(dir.join("solution.json"))?;
    if sol.status.has_solution() {
        sol.write_commitment_csv(dir.join("commitment.csv"))?;
        sol.write_hourly_csv(dir.join("hourly.csv"))?;
        write_inertia_csv(&summarize_inertia(case, sol)?, dir.join("inertia.csv"))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CostRow {
    penetration: f64,
    model: String,
    status: SolveStatus,
    total: f64,
    startup: f64,
    operation: f64,
    reserves: f64,
    virtual_inertia: f64,
    mip_gap: f64,
    wall_time: f64,
}

impl CostRow {
    fn new(penetration: f64, sol: &UcSolution) -> Self {
        Self {
            penetration,
            model: sol.kind.name().to_string(),
            status: sol.status,
            total: sol.costs.total,
            startup: sol.costs.startup,
            operation: sol.costs.operation(),
            reserves: sol.costs.reserve,
            virtual_inertia: sol.costs.virtual_inertia,
            mip_gap: sol.mip_gap,
            wall_time: sol.wall_time,
        }
    }
}

fn write_costs(path: &Path, rows: &[&CostRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "penetration", "model", "status", "total", "startup", "operation", "reserves",
            "virtual_inertia", "mip_gap", "wall_time",
        ])?;
    }
    w.flush()?;
    Ok(())
}
