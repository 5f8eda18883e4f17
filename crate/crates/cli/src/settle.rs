use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use scuc_core::lp::backend_from_env;
use scuc_core::market::{price, settle, write_market_summary_csv};
use scuc_core::network::load_case;
use scuc_core::scuc::build_model;
use scuc_core::{ModelKind, ScucConfig, SurfaceSet, UcSolution};

use crate::exit::{Infeasible, Status};
use crate::manifest::{hash_file, Manifest};

#[derive(Args, Debug, Clone, Serialize)]
pub struct SettleArgs {
    /// Scenario directory of a solve run (holds `case.json`, `config.json` and one
    /// sub-directory per model kind).
    #[arg(long)]
    pub run: PathBuf,
    /// Model kinds to settle; every kind with a solution when omitted.
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<ModelKind>,
}

pub fn run(args: &SettleArgs) -> Result<Status> {
    let dir = &args.run;
    let mut manifest = Manifest::new("settle", args)?;
    let case_path = dir.join("case.json");
    let config_path = dir.join("config.json");
    manifest.inputs.insert("case".into(), hash_file(&case_path)?);
    manifest.inputs.insert("config".into(), hash_file(&config_path)?);
    let case = load_case(&case_path)?;
    let cfg: ScucConfig = serde_json::from_str(
        &std::fs::read_to_string(&config_path).with_context(|| format!("reading {}", config_path.display()))?,
    )?;
    let surfaces_path = dir.join("surfaces.json");
    let surfaces = if surfaces_path.exists() {
        manifest.inputs.insert("surfaces".into(), hash_file(&surfaces_path)?);
        Some(SurfaceSet::load(&surfaces_path)?)
    } else {
        None
    };
    let kinds: Vec<ModelKind> = if args.models.is_empty() {
        ModelKind::ALL
            .into_iter()
            .filter(|k| dir.join(k.name()).join("solution.json").exists())
            .collect()
    } else {
        args.models.clone()
    };
    if kinds.is_empty() {
        return Err(scuc_core::Error::validation(format!("{} holds solved schedules", dir.display())).into());
    }
    let backend = backend_from_env()?;
    manifest.backend = Some(backend.identity());
    manifest.deterministic_backend = Some(backend.deterministic());

    let mut rows = Vec::new();
    for kind in kinds {
        let kind_dir = dir.join(kind.name());
        let sol_path = kind_dir.join("solution.json");
        manifest.inputs.insert(format!("solution {kind}"), hash_file(&sol_path)?);
        let sol = UcSolution::load(&sol_path)?;
        if !sol.status.has_solution() {
            return Err(Infeasible(format!("{kind} has no schedule to settle ({:?})", sol.status)).into());
        }
        let problem = build_model(&case, kind, &cfg, surfaces.as_ref())?;
        let prices = manifest.step(format!("price {kind}"), || price(&problem, &sol, backend.as_ref()))?;
        let settlement = settle(&prices, &sol, &case, problem.vi_price)?;
        prices.write_csv(kind_dir.join("prices.csv"))?;
        settlement.write_csv(kind_dir.join("settlement.csv"))?;
        println!(
            "{kind}: average LMP {:.3}, congestion {:.3}, load payment {:.1}, identity residual {:.1e}",
            settlement.average_lmp,
            settlement.average_congestion_lmp,
            settlement.average.load_payment,
            settlement.identity_residual()
        );
        rows.push(settlement);
    }
    write_market_summary_csv(&rows, dir.join("market.csv"))?;
    manifest.write(dir)?;
    Ok(Status::Success)
}
