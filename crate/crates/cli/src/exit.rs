use std::process::ExitCode;

use scuc_core::Error;

/// Process exit status. The numeric values are a stable scripting contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Success = 0,
    Validation = 2,
    Infeasible = 3,
    Backend = 4,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s as u8)
    }
}

/// A model or pricing LP had no feasible point.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Infeasible(pub String);

pub fn status_for(err: &Error) -> Status {
    match err {
        Error::Backend { .. } | Error::EigenNonConvergence(_) | Error::StepUnstable { .. } => {
            Status::Backend
        }
        Error::PricingInfeasible { .. } => Status::Infeasible,
        _ => Status::Validation,
    }
}

pub fn code_for(err: &anyhow::Error) -> Status {
    if err.downcast_ref::<Infeasible>().is_some() {
        return Status::Infeasible;
    }
    match err.downcast_ref::<Error>() {
        Some(e) => status_for(e),
        None => Status::Validation,
    }
}
