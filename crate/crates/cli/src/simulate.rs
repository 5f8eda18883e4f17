use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use scuc_core::scuc::simulate_contingency;
use scuc_core::{SimulationOptions, UcSolution};

use crate::exit::Status;
use crate::manifest::{create_dir, hash_file, load_case, write_json, Manifest};
use crate::CaseArgs;

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    /// Scenario case the schedule was solved on (a solve run writes it as `case.json`).
    #[command(flatten)]
    pub case: CaseArgs,
    /// Solution JSON written by `solve`.
    #[arg(long)]
    pub solution: PathBuf,
    /// Hour to study (1-based); the case's peak-load hour when omitted.
    #[arg(long)]
    pub hour: Option<usize>,
    /// Unit to trip; the hour's largest committed unit when omitted.
    #[arg(long)]
    pub unit: Option<String>,
    /// Damping-to-inertia ratio (1/s).
    #[arg(long, default_value_t = 0.7)]
    pub gamma: f64,
    /// RoCoF measuring window (s).
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    /// Integration step (s).
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Simulated time (s).
    #[arg(long, default_value_t = 5.0)]
    pub horizon: f64,
    #[arg(long, default_value = "out/simulate")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct StudySummary {
    /// 1-based.
    hour: usize,
    unit: String,
    power_loss_mw: f64,
    worst_bus: scuc_core::BusId,
    max_abs_rocof: f64,
    frequency_minimum: f64,
}

pub fn run(args: &SimulateArgs) -> Result<Status> {
    let (case, input) = load_case(&args.case)?;
    let mut manifest = Manifest::new("simulate", args)?;
    manifest.inputs.insert("case".into(), input);
    manifest.inputs.insert("solution".into(), hash_file(&args.solution)?);
    let sol = UcSolution::load(&args.solution)
        .with_context(|| format!("loading {}", args.solution.display()))?;
    if sol.unit_ids.len() != case.generators.len() {
        return Err(scuc_core::Error::validation("solution and case list the same units").into());
    }
    let hour = match args.hour {
        Some(0) => return Err(scuc_core::Error::validation("hours are 1-based").into()),
        Some(h) => h - 1,
        None => case.peak_hour(),
    };
    let unit = match &args.unit {
        None => None,
        Some(id) => Some(
            case.generators
                .iter()
                .position(|g| &g.id == id)
                .ok_or_else(|| scuc_core::Error::validation(format!("unit {id} is in the case")))?,
        ),
    };
    let opts = SimulationOptions {
        step: args.step,
        horizon: args.horizon,
        rocof_window: args.dt,
        gamma: args.gamma,
        f0: case.f0,
    };
    let study = manifest.step("simulate", || simulate_contingency(&case, &sol, hour, unit, &opts))?;
    create_dir(&args.out)?;
    study.result.write_trajectory_csv(args.out.join("trajectory.csv"))?;
    study.result.write_summary_csv(args.out.join("max_rocof.csv"))?;
    let (worst_bus, max_abs_rocof) = study.result.worst_bus();
    let summary = StudySummary {
        hour: hour + 1,
        unit: study.unit_id.clone(),
        power_loss_mw: study.power_loss_mw,
        worst_bus,
        max_abs_rocof,
        frequency_minimum: study.result.frequency_minimum,
    };
    write_json(&args.out.join("study.json"), &summary)?;
    println!(
        "hour {}: trip {} ({:.1} MW), max |RoCoF| {:.3} Hz/s at bus {}",
        summary.hour, summary.unit, summary.power_loss_mw, max_abs_rocof, worst_bus
    );
    manifest.write(&args.out)?;
    Ok(Status::Success)
}
