use serde::{Deserialize, Serialize};

use super::{ModelKind, ScucConfig};
use crate::error::{Error, Result};
use crate::lp::{export_mps as lp_to_mps, ColId, LinearProgram, RowId};
use crate::network::{BusClass, BusId, GridCase};
use crate::pwl::{ClassSurfaces, SurfaceSet};
use crate::units::omega0;

const INF: f64 = f64::INFINITY;

/// Column and row handles of a built model, indexed `[unit][hour]`, `[branch][hour]` or
/// `[bus][hour]` (positions in the case's lists).
#[derive(Debug, Clone, Default)]
pub struct ScucIndex {
    pub dispatch: Vec<Vec<ColId>>,
    pub reserve: Vec<Vec<ColId>>,
    pub commit: Vec<Vec<ColId>>,
    pub startup: Vec<Vec<ColId>>,
    pub flow: Vec<Vec<ColId>>,
    pub angle: Vec<Vec<ColId>>,
    /// Rated power of committed units, MW.
    pub rated: Option<Vec<Vec<ColId>>>,
    /// System kinetic energy, MWs.
    pub system_inertia: Option<Vec<ColId>>,
    /// Average nodal inertia coefficient.
    pub nodal_inertia: Option<Vec<ColId>>,
    pub inertia_loss: Option<Vec<Vec<ColId>>>,
    /// Purchased virtual inertia, MWs.
    pub virtual_inertia: Option<Vec<ColId>>,
    pub balance: Vec<Vec<RowId>>,
}

/// A built scheduling model together with everything needed to solve, verify and price it.
#[derive(Debug, Clone)]
pub struct UcProblem {
    pub kind: ModelKind,
    pub config: ScucConfig,
    pub case: GridCase,
    pub lp: LinearProgram,
    pub index: ScucIndex,
    /// Retained (generator) bus count used for average nodal inertia.
    pub retained_buses: usize,
    pub vi_price: f64,
    /// Per unit, the surrogate pair for its loss (LRC kinds only).
    pub contingency_surfaces: Vec<ClassSurfaces>,
}

impl UcProblem {
    pub fn horizon(&self) -> usize {
        self.case.horizon()
    }

    /// Converts kinetic energy (MWs) to average nodal inertia.
    pub fn nodal_coefficient(&self, energy_mws: f64) -> f64 {
        nodal_coefficient(&self.case, self.retained_buses, energy_mws)
    }

    /// Multiplier on kinetic energy in the system headroom row: `p <= k (E - E_g)`.
    pub fn headroom_factor(&self) -> f64 {
        2.0 * self.config.rocof_lim / self.case.f0
    }
}

pub(crate) fn nodal_coefficient(case: &GridCase, n: usize, energy_mws: f64) -> f64 {
    2.0 * energy_mws / (n as f64 * omega0(case.f0) * case.base_mva)
}

fn check_surface_context(cfg: &ScucConfig, set: &ClassSurfaces) -> Result<()> {
    for class in [BusClass::Local, BusClass::NonLocal] {
        let s = set.get(class);
        if s.segments.is_empty() {
            return Err(Error::validation(format!("{class} surface has at least one segment")));
        }
        if let Some(ctx) = &s.context {
            let t = match class {
                BusClass::Local => cfg.t1,
                BusClass::NonLocal => cfg.t2,
            };
            let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
            if !same(ctx.gamma, cfg.gamma) || !same(ctx.dt, cfg.dt) || !same(ctx.t, t) {
                return Err(Error::Config(format!(
                    "{class} surface for bus {} was fitted with gamma={}, dt={}, t={} but the \
                     model uses gamma={}, dt={}, t={t}",
                    ctx.event_bus, ctx.gamma, ctx.dt, ctx.t, cfg.gamma, cfg.dt
                )));
            }
        }
    }
    Ok(())
}

/// Assembles the MILP of `kind` for `case`. `surfaces` is required for the locational kinds.
pub fn build_model(
    case: &GridCase,
    kind: ModelKind,
    cfg: &ScucConfig,
    surfaces: Option<&SurfaceSet>,
) -> Result<UcProblem> {
    cfg.validate()?;
    let nt = case.horizon();
    let ng = case.generators.len();
    if ng == 0 || nt == 0 {
        return Err(Error::validation("case has generators and at least one hour"));
    }
    let retained = case.generator_buses().len();
    let contingency_surfaces = if kind.needs_surfaces() {
        let set = surfaces.ok_or_else(|| {
            Error::Config(format!("model `{kind}` needs local and non-local RoCoF surfaces"))
        })?;
        case.generators
            .iter()
            .map(|g| {
                let s = set.for_contingency(g.bus)?;
                check_surface_context(cfg, s)?;
                Ok(s.clone())
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let vi_price = cfg.vi_price_for(case);
    let mut lp = LinearProgram::new(format!("scuc_{}", kind.name().replace('-', "_")));
    let hours = 0..nt;
    let tn = |t: usize| t + 1;

    // Columns.
    let gen_cols = |lp: &mut LinearProgram, prefix: &str, f: &dyn Fn(usize) -> (f64, f64, f64, bool)| {
        (0..ng)
            .map(|g| {
                hours
                    .clone()
                    .map(|t| {
                        let (lo, up, cost, int) = f(g);
                        lp.add_column(format!("{prefix}_g{}_t{}", g + 1, tn(t)), lo, up, cost, int)
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    let gens = &case.generators;
    let dispatch = gen_cols(&mut lp, "p", &|g| (0.0, gens[g].p_max, gens[g].cost, false));
    let reserve = gen_cols(&mut lp, "r", &|g| (0.0, gens[g].reserve_cap, gens[g].reserve_cost, false));
    let commit = gen_cols(&mut lp, "u", &|g| (0.0, 1.0, gens[g].no_load_cost, true));
    let startup = gen_cols(&mut lp, "v", &|g| (0.0, 1.0, gens[g].startup_cost, true));
    let flow: Vec<Vec<ColId>> = case
        .branches
        .iter()
        .enumerate()
        .map(|(k, br)| {
            hours
                .clone()
                .map(|t| {
                    lp.add_column(format!("flow_k{}_t{}", k + 1, tn(t)), -br.capacity, br.capacity, 0.0, false)
                })
                .collect()
        })
        .collect();
    let reference = case.reference_bus();
    let angle: Vec<Vec<ColId>> = case
        .buses
        .iter()
        .map(|b| {
            let (lo, up) = if b.id == reference { (0.0, 0.0) } else { (-INF, INF) };
            hours
                .clone()
                .map(|t| lp.add_column(format!("theta_n{}_t{}", b.id, tn(t)), lo, up, 0.0, false))
                .collect()
        })
        .collect();

    let rated = (kind != ModelKind::T)
        .then(|| gen_cols(&mut lp, "k", &|g| (0.0, gens[g].p_max, 0.0, false)));
    let system_inertia = (kind.is_erc()).then(|| {
        hours
            .clone()
            .map(|t| lp.add_column(format!("M_t{}", tn(t)), 0.0, INF, 0.0, false))
            .collect::<Vec<_>>()
    });
    let nodal_inertia = kind.is_lrc().then(|| {
        hours
            .clone()
            .map(|t| lp.add_column(format!("m_t{}", tn(t)), 0.0, INF, 0.0, false))
            .collect::<Vec<_>>()
    });
    let inertia_loss = kind
        .is_lrc()
        .then(|| gen_cols(&mut lp, "dm", &|_| (0.0, INF, 0.0, false)));
    let virtual_inertia = kind.has_vi().then(|| {
        hours
            .clone()
            .map(|t| lp.add_column(format!("mvi_t{}", tn(t)), 0.0, INF, vi_price, false))
            .collect::<Vec<_>>()
    });

    // Nodal balance and DC flows.
    let mut balance = Vec::with_capacity(case.buses.len());
    for bus in &case.buses {
        let mut rows = Vec::with_capacity(nt);
        for t in hours.clone() {
            let mut coef: Vec<(ColId, f64)> = Vec::new();
            for (g, gen) in gens.iter().enumerate() {
                if gen.bus == bus.id {
                    coef.push((dispatch[g][t], 1.0));
                }
            }
            for (k, br) in case.branches.iter().enumerate() {
                if br.to_bus == bus.id {
                    coef.push((flow[k][t], 1.0));
                }
                if br.from_bus == bus.id {
                    coef.push((flow[k][t], -1.0));
                }
            }
            let rhs = case.demand(bus.id, t) - case.renewable(bus.id, t);
            rows.push(lp.add_row(format!("bal_n{}_t{}", bus.id, tn(t)), rhs, rhs, coef));
        }
        balance.push(rows);
    }
    for (k, br) in case.branches.iter().enumerate() {
        let from = case.bus_index(br.from_bus)?;
        let to = case.bus_index(br.to_bus)?;
        let y = case.base_mva * br.susceptance;
        for t in hours.clone() {
            lp.add_row(
                format!("flow_k{}_t{}", k + 1, tn(t)),
                0.0,
                0.0,
                vec![(flow[k][t], 1.0), (angle[from][t], -y), (angle[to][t], y)],
            );
        }
    }

    // Unit limits, reserve and ramping.
    for (g, gen) in gens.iter().enumerate() {
        for t in hours.clone() {
            let (p, r, u) = (dispatch[g][t], reserve[g][t], commit[g][t]);
            let tag = format!("g{}_t{}", g + 1, tn(t));
            lp.add_row(format!("pmin_{tag}"), -INF, 0.0, vec![(u, gen.p_min), (p, -1.0)]);
            lp.add_row(format!("cap_{tag}"), -INF, 0.0, vec![(p, 1.0), (r, 1.0), (u, -gen.p_max)]);
            lp.add_row(format!("rescap_{tag}"), -INF, 0.0, vec![(r, 1.0), (u, -gen.reserve_cap)]);
            let mut cover: Vec<(ColId, f64)> = (0..ng)
                .filter(|&j| !(cfg.reserve_excludes_self && j == g))
                .map(|j| (reserve[j][t], 1.0))
                .collect();
            cover.push((p, -1.0));
            cover.push((r, -1.0));
            lp.add_row(format!("g1res_{tag}"), 0.0, INF, cover);
            if t >= 1 {
                let prev = dispatch[g][t - 1];
                lp.add_row(format!("rampup_{tag}"), -INF, gen.ramp, vec![(p, 1.0), (prev, -1.0)]);
                lp.add_row(format!("rampdn_{tag}"), -INF, gen.ramp, vec![(prev, 1.0), (p, -1.0)]);
            }
        }
    }

    // Start-up logic with every unit initially off.
    for g in 0..ng {
        for t in hours.clone() {
            let tag = format!("g{}_t{}", g + 1, tn(t));
            let (u, v) = (commit[g][t], startup[g][t]);
            let mut on = vec![(v, 1.0), (u, -1.0)];
            if t >= 1 {
                on.push((commit[g][t - 1], 1.0));
            }
            lp.add_row(format!("su_{tag}"), 0.0, INF, on);
            if t + 1 < nt {
                lp.add_row(
                    format!("sulock_{tag}"),
                    -INF,
                    1.0,
                    vec![(startup[g][t + 1], 1.0), (u, 1.0)],
                );
            }
            lp.add_row(format!("suon_{tag}"), -INF, 0.0, vec![(v, 1.0), (u, -1.0)]);
        }
    }

    // Frequency-security families.
    if let Some(k) = &rated {
        for (g, gen) in gens.iter().enumerate() {
            for t in hours.clone() {
                lp.add_row(
                    format!("rated_g{}_t{}", g + 1, tn(t)),
                    0.0,
                    0.0,
                    vec![(k[g][t], 1.0), (commit[g][t], -gen.p_max)],
                );
            }
        }
    }
    if let (Some(m_sys), Some(k)) = (&system_inertia, &rated) {
        let factor = 2.0 * cfg.rocof_lim / case.f0;
        for t in hours.clone() {
            let mut coef: Vec<(ColId, f64)> = vec![(m_sys[t], 1.0)];
            coef.extend(gens.iter().enumerate().map(|(g, gen)| (k[g][t], -gen.inertia_h)));
            lp.add_row(format!("sysinertia_t{}", tn(t)), 0.0, 0.0, coef);
            for (g, gen) in gens.iter().enumerate() {
                let mut coef = vec![
                    (dispatch[g][t], 1.0),
                    (m_sys[t], -factor),
                    (k[g][t], factor * gen.inertia_h),
                ];
                if let Some(vi) = &virtual_inertia {
                    coef.push((vi[t], -factor));
                }
                lp.add_row(format!("erc_g{}_t{}", g + 1, tn(t)), -INF, 0.0, coef);
            }
        }
    }
    if let (Some(m), Some(dm), Some(k)) = (&nodal_inertia, &inertia_loss, &rated) {
        let per_energy = nodal_coefficient(case, retained, 1.0);
        let all_on: f64 = gens.iter().map(|g| g.kinetic_energy()).sum();
        let vi_cap = if kind.has_vi() { cfg.vi_budget } else { 0.0 };
        let m_max = per_energy * (all_on + vi_cap);
        for t in hours.clone() {
            let mut coef: Vec<(ColId, f64)> = vec![(m[t], 1.0)];
            coef.extend(
                gens.iter()
                    .enumerate()
                    .map(|(g, gen)| (k[g][t], -per_energy * gen.inertia_h)),
            );
            if let Some(vi) = &virtual_inertia {
                coef.push((vi[t], -per_energy));
            }
            lp.add_row(format!("nodal_t{}", tn(t)), 0.0, 0.0, coef);
            for (g, gen) in gens.iter().enumerate() {
                lp.add_row(
                    format!("dm_g{}_t{}", g + 1, tn(t)),
                    0.0,
                    0.0,
                    vec![(dm[g][t], 1.0), (k[g][t], -per_energy * gen.inertia_h)],
                );
            }
        }
        for (g, set) in contingency_surfaces.iter().enumerate() {
            for class in [BusClass::Local, BusClass::NonLocal] {
                let suffix = match class {
                    BusClass::Local => "local",
                    BusClass::NonLocal => "nonlocal",
                };
                for (v, seg) in set.get(class).segments.iter().enumerate() {
                    let [a, b, c, d] = *seg;
                    // An offline unit cannot trip; its rows are lifted by the largest value the
                    // segment can take with zero dispatch and zero inertia loss.
                    let idle = d.max(b * m_max + d);
                    let big_m = (idle - cfg.rocof_lim).max(0.0);
                    for t in hours.clone() {
                        let mut coef = vec![
                            (dispatch[g][t], a / case.base_mva),
                            (m[t], b),
                            (dm[g][t], c),
                        ];
                        if big_m > 0.0 {
                            coef.push((commit[g][t], big_m));
                        }
                        lp.add_row(
                            format!("lrc_seg_v{}_g{}_t{}_{suffix}", v + 1, g + 1, tn(t)),
                            -INF,
                            cfg.rocof_lim - d + big_m,
                            coef,
                        );
                    }
                }
            }
        }
    }
    if let Some(vi) = &virtual_inertia {
        for t in hours.clone() {
            lp.add_row(format!("vibudget_t{}", tn(t)), -INF, cfg.vi_budget, vec![(vi[t], 1.0)]);
        }
    }

    Ok(UcProblem {
        kind,
        config: *cfg,
        case: case.clone(),
        lp,
        index: ScucIndex {
            dispatch,
            reserve,
            commit,
            startup,
            flow,
            angle,
            rated,
            system_inertia,
            nodal_inertia,
            inertia_loss,
            virtual_inertia,
            balance,
        },
        retained_buses: retained,
        vi_price,
        contingency_surfaces,
    })
}

/// Free-format MPS text of the model.
pub fn export_mps(problem: &UcProblem) -> String {
    lp_to_mps(&problem.lp)
}

/// Counts of the main column and row families, for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSize {
    pub columns: usize,
    pub binaries: usize,
    pub rows: usize,
    pub surrogate_rows: usize,
}

impl UcProblem {
    pub fn size(&self) -> ModelSize {
        ModelSize {
            columns: self.lp.columns.len(),
            binaries: self.lp.num_integer(),
            rows: self.lp.rows.len(),
            surrogate_rows: self
                .lp
                .rows
                .iter()
                .filter(|r| r.name.starts_with("lrc_seg_"))
                .count(),
        }
    }

    pub fn bus_ids(&self) -> Vec<BusId> {
        self.case.bus_ids()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_laplacian, eigendecompose, kron_reduce};
    use crate::pwl::{fit_surface_set, EvaluationGrid, SurfaceSpec};

    fn small_case() -> GridCase {
        GridCase::ieee24().truncate_horizon(2).unwrap()
    }

    pub(crate) fn toy_surfaces(case: &GridCase, cfg: &ScucConfig) -> SurfaceSet {
        let retained = case.generator_buses();
        let rn = kron_reduce(&build_laplacian(case, None).unwrap(), &retained).unwrap();
        let modes = eigendecompose(&rn).unwrap();
        let grid = EvaluationGrid::for_case(case, retained.len(), 3).unwrap();
        let mut spec = SurfaceSpec::default();
        spec.fit.restarts = 4;
        fit_surface_set(&modes, &[BusId(18)], &cfg.dynamics(case.f0), |_| Ok(grid), &spec).unwrap()
    }

    #[test]
    fn t_model_has_no_inertia_columns() {
        let p = build_model(&small_case(), ModelKind::T, &ScucConfig::default(), None).unwrap();
        assert!(p.index.rated.is_none() && p.index.system_inertia.is_none());
        assert!(p.index.nodal_inertia.is_none() && p.index.virtual_inertia.is_none());
        let binaries: Vec<_> = p.lp.columns.iter().filter(|c| c.integer).collect();
        assert_eq!(binaries.len(), 2 * 38 * 2);
        assert!(binaries.iter().all(|c| c.name.starts_with("u_") || c.name.starts_with("v_")));
    }

    #[test]
    fn lrc_needs_surfaces() {
        let err = build_model(&small_case(), ModelKind::Lrc, &ScucConfig::default(), None);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn lrc_segment_rows_per_class() {
        let case = small_case();
        let cfg = ScucConfig::default();
        let set = toy_surfaces(&case, &cfg);
        let p = build_model(&case, ModelKind::Lrc, &cfg, Some(&set)).unwrap();
        let count = |suffix: &str| {
            p.lp.rows
                .iter()
                .filter(|r| r.name.starts_with("lrc_seg_v") && r.name.ends_with(suffix))
                .count()
        };
        assert_eq!(count("_local"), 4 * 38 * 2);
        assert_eq!(count("_nonlocal"), 4 * 38 * 2);
        assert!(p.lp.row_id("lrc_seg_v4_g38_t2_nonlocal").is_some());
        assert!(p.lp.row_id("m_t1").is_none() && p.lp.column_id("m_t1").is_some());
    }

    #[test]
    fn family_membership_by_kind() {
        let case = small_case();
        let cfg = ScucConfig::default();
        let set = toy_surfaces(&case, &cfg);
        let has = |kind: ModelKind, prefix: &str| {
            build_model(&case, kind, &cfg, Some(&set))
                .unwrap()
                .lp
                .rows
                .iter()
                .any(|r| r.name.starts_with(prefix))
        };
        assert!(!has(ModelKind::T, "erc_") && !has(ModelKind::T, "rated_"));
        assert!(has(ModelKind::Erc, "erc_") && !has(ModelKind::Erc, "lrc_seg"));
        assert!(has(ModelKind::Lrc, "lrc_seg") && !has(ModelKind::Lrc, "erc_"));
        assert!(!has(ModelKind::Lrc, "sysinertia_"));
        assert!(has(ModelKind::ViErc, "vibudget_") && has(ModelKind::ViErc, "sysinertia_"));
        assert!(has(ModelKind::ViLrc, "vibudget_") && !has(ModelKind::ViLrc, "sysinertia_"));
    }

    #[test]
    fn reserve_flag_drops_own_term() {
        let case = small_case();
        let cfg = ScucConfig {
            reserve_excludes_self: true,
            ..Default::default()
        };
        let p = build_model(&case, ModelKind::T, &cfg, None).unwrap();
        let row = &p.lp.rows[p.lp.row_id("g1res_g1_t1").unwrap().0];
        let own = p.index.reserve[0][0];
        assert_eq!(row.coefficients.iter().find(|(c, _)| *c == own).unwrap().1, -1.0);
        let q = build_model(&case, ModelKind::T, &ScucConfig::default(), None).unwrap();
        let row = &q.lp.rows[q.lp.row_id("g1res_g1_t1").unwrap().0];
        assert!(row.coefficients.iter().all(|(c, _)| *c != own));
    }

    #[test]
    fn mismatched_surface_parameters_rejected() {
        let case = small_case();
        let set = toy_surfaces(&case, &ScucConfig::default());
        let cfg = ScucConfig {
            gamma: 0.9,
            ..Default::default()
        };
        assert!(build_model(&case, ModelKind::Lrc, &cfg, Some(&set)).is_err());
    }

    #[test]
    fn mps_marks_binaries() {
        let p = build_model(&small_case(), ModelKind::T, &ScucConfig::default(), None).unwrap();
        let text = export_mps(&p);
        assert!(text.contains("'INTORG'"));
        let back = crate::lp::import_mps(&text).unwrap();
        assert_eq!(back.num_integer(), p.lp.num_integer());
        assert!(back.columns.iter().filter(|c| c.integer).all(|c| c.name.starts_with("u_") || c.name.starts_with("v_")));
    }
}
