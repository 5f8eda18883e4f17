use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    eval_segments, fit_pwl, sample_coupling, BoxSpec, EvaluationGrid, FitOptions, FitProblem, FitReport,
    Sample, Segment,
};
use crate::dynamics::DynamicParams;
use crate::error::{Error, Result};
use crate::network::{classify_buses, BusClass, BusId, GridCase, ModalDecomposition};

/// Where a surface came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceContext {
    pub event_bus: BusId,
    pub class: BusClass,
    /// Measuring instant used for the class (s).
    pub t: f64,
    pub dt: f64,
    pub gamma: f64,
    /// Buses whose worst case the surface covers.
    pub buses: Vec<BusId>,
    /// Extreme Fiedler couplings `beta_2n * beta_2b` over those buses.
    pub coupling_min: f64,
    pub coupling_max: f64,
    pub grid: EvaluationGrid,
}

/// Max-of-affine surrogate in (dP p.u., m, dm) -> Hz/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlSurface {
    pub segments: Vec<Segment>,
    pub context: Option<SurfaceContext>,
    pub fit_report: FitReport,
}

impl PwlSurface {
    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        eval_pwl(self, x)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("surface (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if s.segments.is_empty() {
            return Err(Error::validation("surface has at least one segment"));
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&read(path.as_ref())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write(path.as_ref(), &(self.to_json_string()? + "\n"))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Maximum of the affine segments at `x = (dP, m, dm)`.
pub fn eval_pwl(surface: &PwlSurface, x: &[f64; 3]) -> f64 {
    eval_segments(&surface.segments, x)
}

/// Raises every intercept by the largest under-estimate so that the surrogate is at least
/// the sampled value at every training point.
pub fn make_conservative(surface: &PwlSurface, samples: &[Sample]) -> PwlSurface {
    let shortfall = |segs: &[Segment]| {
        samples
            .iter()
            .map(|s| s.value - eval_segments(segs, &s.x))
            .fold(0.0_f64, f64::max)
    };
    let mut out = surface.clone();
    let mut delta = shortfall(&out.segments);
    let mut total = 0.0;
    // Rounding in the affine sums can leave a residual ulp-level gap; repeat until exact.
    while delta > 0.0 {
        for s in &mut out.segments {
            s[3] += delta;
        }
        total += delta;
        let rest = shortfall(&out.segments);
        delta = if rest > 0.0 {
            rest.max(f64::EPSILON * (1.0 + total.abs()))
        } else {
            0.0
        };
    }
    let (rmse, worst) = FitReport::errors(&out.segments, samples);
    out.fit_report.rmse = rmse;
    out.fit_report.max_signed_error = worst;
    out.fit_report.conservative_shift = surface.fit_report.conservative_shift + total;
    out
}

/// Local and non-local surfaces for one event bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSurfaces {
    pub local: PwlSurface,
    pub nonlocal: PwlSurface,
}

impl ClassSurfaces {
    pub fn get(&self, class: BusClass) -> &PwlSurface {
        match class {
            BusClass::Local => &self.local,
            BusClass::NonLocal => &self.nonlocal,
        }
    }
}

/// Surfaces keyed by event bus. A set with a single entry serves every contingency.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSet {
    pub by_event_bus: BTreeMap<BusId, ClassSurfaces>,
}

impl SurfaceSet {
    pub fn single(bus: BusId, surfaces: ClassSurfaces) -> Self {
        Self {
            by_event_bus: [(bus, surfaces)].into(),
        }
    }

    pub fn len(&self) -> usize {
        self.by_event_bus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_event_bus.is_empty()
    }

    /// Surfaces bounding a contingency at `bus`.
    pub fn for_contingency(&self, bus: BusId) -> Result<&ClassSurfaces> {
        if let Some(s) = self.by_event_bus.get(&bus) {
            return Ok(s);
        }
        match self.by_event_bus.values().next() {
            Some(s) if self.by_event_bus.len() == 1 => Ok(s),
            _ => Err(Error::MissingSurface(bus)),
        }
    }

    pub fn segments(&self) -> usize {
        self.by_event_bus
            .values()
            .map(|s| s.local.segments.len().max(s.nonlocal.segments.len()))
            .max()
            .unwrap_or(0)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("surface set (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&read(path.as_ref())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write(path.as_ref(), &(self.to_json_string()? + "\n"))
    }
}

/// Settings for fitting class surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub segments: usize,
    pub conservative: bool,
    /// Sample the pointwise maximum over the class's extreme couplings instead of its
    /// representative worst bus.
    pub class_envelope: bool,
    pub fit: FitOptions,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        Self {
            segments: 4,
            conservative: true,
            class_envelope: false,
            fit: FitOptions::default(),
        }
    }
}

/// Training samples for `class` under a disturbance at `event_bus`.
///
/// By default the class is represented by its worst bus: the largest coupling
/// `beta_2n * beta_2b` for local buses, the smallest for non-local ones. With `envelope`
/// the samples bound every member: the two-mode RoCoF is affine in the coupling, so the
/// pointwise maximum over the class sits at its smallest or largest coupling.
pub fn class_samples(
    modes: &ModalDecomposition,
    event_bus: BusId,
    class: BusClass,
    params: &DynamicParams,
    grid: &EvaluationGrid,
    envelope: bool,
) -> Result<(Vec<Sample>, SurfaceContext)> {
    let classes = classify_buses(modes, event_bus)?;
    let b = modes.position(event_bus)?;
    let members: Vec<BusId> = classes.members(class).iter().copied().collect();
    let couplings: Vec<f64> = members
        .iter()
        .map(|bus| modes.position(*bus).map(|n| modes.coupling(2, n, b)))
        .collect::<Result<_>>()?;
    let c_min = couplings.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_max = couplings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let t = match class {
        BusClass::Local => params.t1,
        BusClass::NonLocal => params.t2,
    };
    let (lambda2, n) = (modes.eigenvalue(2), modes.len());
    let sample = |c| sample_coupling(c, lambda2, n, t, params.dt, params.gamma, grid);
    let samples = match (envelope, class) {
        (true, _) => sample(c_min)?
            .into_iter()
            .zip(sample(c_max)?)
            .map(|(a, b)| Sample {
                x: a.x,
                value: a.value.max(b.value),
            })
            .collect(),
        (false, BusClass::Local) => sample(c_max)?,
        (false, BusClass::NonLocal) => sample(c_min)?,
    };
    let ctx = SurfaceContext {
        event_bus,
        class,
        t,
        dt: params.dt,
        gamma: params.gamma,
        buses: members,
        coupling_min: c_min,
        coupling_max: c_max,
        grid: *grid,
    };
    Ok((samples, ctx))
}

/// Fits one class surface for `event_bus`.
pub fn fit_class_surface(
    modes: &ModalDecomposition,
    event_bus: BusId,
    class: BusClass,
    params: &DynamicParams,
    grid: &EvaluationGrid,
    spec: &SurfaceSpec,
) -> Result<PwlSurface> {
    let (samples, ctx) = class_samples(modes, event_bus, class, params, grid, spec.class_envelope)?;
    let problem = FitProblem::new(samples, spec.segments)?;
    let mut surface = fit_pwl(&problem, &spec.fit)?;
    if spec.conservative {
        surface = make_conservative(&surface, &problem.samples);
    }
    surface.context = Some(ctx);
    Ok(surface)
}

/// Local and non-local surfaces for each of `event_buses`, sampled on `grid_for(bus)`.
pub fn fit_surface_set(
    modes: &ModalDecomposition,
    event_buses: &[BusId],
    params: &DynamicParams,
    grid_for: impl Fn(BusId) -> Result<EvaluationGrid>,
    spec: &SurfaceSpec,
) -> Result<SurfaceSet> {
    params.validate()?;
    let mut set = SurfaceSet::default();
    for &bus in event_buses {
        let grid = grid_for(bus)?;
        let local = fit_class_surface(modes, bus, BusClass::Local, params, &grid, spec)?;
        let nonlocal = fit_class_surface(modes, bus, BusClass::NonLocal, params, &grid, spec)?;
        set.by_event_bus.insert(bus, ClassSurfaces { local, nonlocal });
    }
    Ok(set)
}

/// Surfaces for every generator bus of `case`, each on its own event-bus box.
pub fn fit_case_surfaces(
    case: &GridCase,
    modes: &ModalDecomposition,
    params: &DynamicParams,
    bounds: &BoxSpec,
    spec: &SurfaceSpec,
) -> Result<SurfaceSet> {
    let buses = case.generator_buses();
    fit_surface_set(
        modes,
        &buses,
        params,
        |bus| bounds.event_bus_grid(case, modes, params, bus),
        spec,
    )
}
