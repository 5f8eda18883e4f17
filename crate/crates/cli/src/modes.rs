use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use scuc_core::dynamics::modal_frequency;
use scuc_core::network::{build_laplacian, classify_buses, eigendecompose, kron_reduce};
use scuc_core::units::energy_to_coefficient;
use scuc_core::{BusClass, BusId};

use crate::exit::Status;
use crate::manifest::{create_dir, load_case, write_json, Manifest};
use crate::CaseArgs;

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModesArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Bus whose disturbance defines the local/non-local split.
    #[arg(long, default_value_t = 18)]
    pub event_bus: u32,
    /// Damping ratio used for the reported mode frequencies (1/s).
    #[arg(long, default_value_t = 0.7)]
    pub gamma: f64,
    #[arg(long, default_value = "out/modes")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ModalReport {
    buses: Vec<BusId>,
    eigenvalues: Vec<f64>,
    fiedler: Vec<f64>,
    event_bus: BusId,
    local: Vec<BusId>,
    nonlocal: Vec<BusId>,
    /// `lambda_3 / lambda_2`.
    eigenvalue_ratio: Option<f64>,
    /// Damped frequency ratio of modes 3 and 2 at the all-units-on average nodal inertia.
    frequency_ratio: Option<f64>,
    reconstruction_error: f64,
}

pub fn run(args: &ModesArgs) -> Result<Status> {
    let (case, input) = load_case(&args.case)?;
    let mut manifest = Manifest::new("modes", args)?;
    manifest.inputs.insert("case".into(), input);
    create_dir(&args.out)?;

    let retained = case.generator_buses();
    let reduced = manifest.step("kron_reduce", || kron_reduce(&build_laplacian(&case, None)?, &retained))?;
    let modes = manifest.step("eigendecompose", || eigendecompose(&reduced))?;
    let event = BusId(args.event_bus);
    let classes = classify_buses(&modes, event)?;
    let fiedler = modes.fiedler()?;

    let energy: f64 = case.generators.iter().map(|g| g.kinetic_energy()).sum();
    let m = energy_to_coefficient(energy, case.f0, case.base_mva) / modes.len() as f64;
    let frequency_ratio = (modes.len() >= 3)
        .then(|| {
            let w2 = modal_frequency(modes.eigenvalue(2), m, args.gamma)?;
            let w3 = modal_frequency(modes.eigenvalue(3), m, args.gamma)?;
            Some(w3 / w2)
        })
        .flatten();

    let report = ModalReport {
        buses: modes.buses.clone(),
        eigenvalues: modes.eigenvalues.iter().copied().collect(),
        fiedler: fiedler.clone(),
        event_bus: event,
        local: classes.local.iter().copied().collect(),
        nonlocal: classes.nonlocal.iter().copied().collect(),
        eigenvalue_ratio: modes.spectral_gap_ratio(),
        frequency_ratio,
        reconstruction_error: modes.reconstruction_error(&reduced.laplacian),
    };
    write_json(&args.out.join("modes.json"), &report)?;

    let mut w = csv::Writer::from_path(args.out.join("eigenvalues.csv"))?;
    w.write_record(["mode", "eigenvalue"])?;
    for (k, l) in report.eigenvalues.iter().enumerate() {
        w.write_record([(k + 1).to_string(), l.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(args.out.join("fiedler.csv"))?;
    w.write_record(["bus", "fiedler_value", "class"])?;
    for (bus, value) in modes.buses.iter().zip(&fiedler) {
        let class = match classes.class_of(*bus) {
            Some(BusClass::Local) => "local",
            _ => "nonlocal",
        };
        w.write_record([bus.to_string(), value.to_string(), class.into()])?;
    }
    w.flush()?;

    println!("retained buses: {}", modes.len());
    println!("eigenvalues: {:?}", report.eigenvalues);
    if let Some(r) = report.eigenvalue_ratio {
        println!("lambda3/lambda2 = {r:.3}");
    }
    if let Some(r) = report.frequency_ratio {
        println!("omega3/omega2 = {r:.3} (gamma = {})", args.gamma);
    }
    let list = |v: &[BusId]| v.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ");
    println!(
        "event bus {event}: local [{}], non-local [{}]",
        list(&report.local),
        list(&report.nonlocal)
    );
    manifest.write(&args.out)?;
    Ok(Status::Success)
}
