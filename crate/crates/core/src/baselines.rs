//! Comparison strategies and the brute-force verification oracle.
//!
//! Two baselines bracket the proposed solver: a diesel-only dispatch that
//! meets the whole lossy load from the generator, and a static-efficiency
//! hybrid that solves the same constrained problem with the charge and
//! discharge efficiencies frozen (which collapses every block update to
//! closed form). The brute-force oracle enumerates grid-quantized schedules
//! for short horizons and provides an independent optimum to check the
//! solver against.

use rayon::prelude::*;
use serde::Serialize;

use crate::admm::{solve_with_model, SolveOutcome, SolverOptions};
use crate::error::{DomainError, SolveError};
use crate::microgrid::{NetworkParams, Schedule};
use crate::objective::{total_objective, CostBreakdown, CostParams};
use crate::problem::{DispatchProblem, EfficiencyModel};

/// Cost comparison across the three strategies.
///
/// Percentages follow `100 * (cost_baseline - cost_proposed) /
/// cost_baseline` and are `None` when the baseline cost is zero or negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SavingsReport {
    pub scenario: String,
    pub cost_diesel_only: f64,
    pub cost_static_hybrid: f64,
    pub cost_proposed: f64,
    pub pct_vs_diesel: Option<f64>,
    pub pct_vs_static: Option<f64>,
}

/// Builds the savings report from the three strategy costs.
pub fn savings_report(
    scenario: &str,
    cost_diesel_only: f64,
    cost_static_hybrid: f64,
    cost_proposed: f64,
) -> SavingsReport {
    let pct = |baseline: f64| {
        (baseline > 0.0).then(|| 100.0 * (baseline - cost_proposed) / baseline)
    };
    SavingsReport {
        scenario: scenario.to_string(),
        cost_diesel_only,
        cost_static_hybrid,
        cost_proposed,
        pct_vs_diesel: pct(cost_diesel_only),
        pct_vs_static: pct(cost_static_hybrid),
    }
}

/// Diesel-only dispatch: the generator covers the whole lossy load, storage
/// and PV stay idle. Errors with the offending step when the generator limit
/// is exceeded.
pub fn diesel_only_dispatch(
    load_kw: &[f64],
    dt_hours: f64,
    net: &NetworkParams,
    cost: &CostParams,
) -> Result<(Schedule, CostBreakdown), SolveError> {
    let mut schedule = Schedule::zeros(load_kw.len(), dt_hours, net.soc_initial_kwh);
    for (t, &load) in load_kw.iter().enumerate() {
        let p = net.loss_factor * load;
        if p > net.gen_max_kw + 1e-9 {
            return Err(SolveError::Infeasible {
                step: t,
                required: p,
                available: net.gen_max_kw,
            });
        }
        schedule.p_gl[t] = p;
    }
    let mut j1 = 0.0;
    for &g in &schedule.p_gl {
        j1 += crate::objective::generator_cost(g, cost);
    }
    let breakdown = CostBreakdown {
        j1_total: j1,
        j2_total: 0.0,
        j3_total: 0.0,
        objective: cost.w1 * j1,
    };
    Ok((schedule, breakdown))
}

/// Hybrid dispatch without rate dependence: the same ADMM path with the
/// efficiencies frozen at the given constants.
pub fn static_hybrid_dispatch(
    problem: &DispatchProblem,
    eta_c0: f64,
    eta_d0: f64,
    opts: &SolverOptions,
) -> Result<SolveOutcome, SolveError> {
    for (name, value) in [("eta_c0", eta_c0), ("eta_d0", eta_d0)] {
        if !(value > 0.0 && value <= 1.0) {
            return Err(DomainError::BadParameter {
                name,
                value,
                constraint: "must lie in (0, 1]",
            }
            .into());
        }
    }
    solve_with_model(
        problem,
        EfficiencyModel::Static {
            eta_c: eta_c0,
            eta_d: eta_d0,
            battery: problem.battery.clone(),
        },
        opts,
    )
}

/// One candidate storage decision at a step: charge or discharge, never
/// both (regime exclusivity on the grid).
#[derive(Debug, Clone, Copy)]
struct StorageOption {
    charge: f64,
    discharge: f64,
    /// Objective contribution of this option with its best (p_pvl, p_gl).
    contribution: f64,
    p_pvl: f64,
    p_gl: f64,
}

/// Exhaustive grid search over schedules for horizons up to 3.
///
/// Enumerates storage decisions on the grid per step, pairs each with its
/// cheapest balance-feasible generator/PV split (balance within half a grid
/// step), chains the SOC across steps against the bounds, and returns the
/// minimum-objective schedule. The outermost step's options are scanned in
/// parallel.
pub fn brute_force_oracle(
    problem: &DispatchProblem,
    grid_step: f64,
) -> Result<(Schedule, f64), SolveError> {
    problem.validate()?;
    let n = problem.horizon();
    if n > 3 {
        return Err(SolveError::OracleHorizonTooLarge(n));
    }
    if grid_step <= 0.0 || !grid_step.is_finite() {
        return Err(SolveError::BadGridStep(grid_step));
    }

    let model = EfficiencyModel::Dynamic(problem.battery.clone());
    let per_step: Vec<Vec<StorageOption>> = (0..n)
        .map(|t| step_options(problem, &model, t, grid_step))
        .collect();
    for (t, options) in per_step.iter().enumerate() {
        if options.is_empty() {
            return Err(SolveError::Infeasible {
                step: t,
                required: problem.network.loss_factor * problem.load_kw[t],
                available: problem.network.gen_max_kw,
            });
        }
    }

    let soc0 = problem.network.soc_initial_kwh;
    let best = per_step[0]
        .par_iter()
        .filter_map(|first| {
            let soc1 = soc_after(soc0, first, &model, problem.dt_hours);
            if !soc_ok(soc1, &problem.network) {
                return None;
            }
            let mut best: Option<(f64, Vec<StorageOption>)> = None;
            search_tail(
                problem,
                &model,
                &per_step,
                1,
                soc1,
                first.contribution,
                &mut vec![*first],
                &mut best,
            );
            best
        })
        .min_by(|a, b| a.0.total_cmp(&b.0));

    let Some((_, picks)) = best else {
        return Err(SolveError::OracleNoFeasiblePoint);
    };

    let mut schedule = Schedule::zeros(n, problem.dt_hours, soc0);
    for (t, pick) in picks.iter().enumerate() {
        schedule.p_gl[t] = pick.p_gl;
        schedule.p_pvl[t] = pick.p_pvl;
        schedule.p_pves[t] = pick.charge;
        schedule.p_esl[t] = pick.discharge;
    }
    schedule.soc = crate::microgrid::soc_trajectory(
        &schedule.p_pves,
        &schedule.p_esl,
        soc0,
        problem.dt_hours,
        &problem.battery,
    )?;
    let objective = total_objective(&schedule, &problem.load_kw, &problem.battery, &problem.cost)?
        .objective;
    Ok((schedule, objective))
}

#[allow(clippy::too_many_arguments)]
fn search_tail(
    problem: &DispatchProblem,
    model: &EfficiencyModel,
    per_step: &[Vec<StorageOption>],
    t: usize,
    soc: f64,
    cost_so_far: f64,
    picks: &mut Vec<StorageOption>,
    best: &mut Option<(f64, Vec<StorageOption>)>,
) {
    if t == per_step.len() {
        if best.as_ref().is_none_or(|(c, _)| cost_so_far < *c) {
            *best = Some((cost_so_far, picks.clone()));
        }
        return;
    }
    for option in &per_step[t] {
        let next_soc = soc_after(soc, option, model, problem.dt_hours);
        if !soc_ok(next_soc, &problem.network) {
            continue;
        }
        picks.push(*option);
        search_tail(
            problem,
            model,
            per_step,
            t + 1,
            next_soc,
            cost_so_far + option.contribution,
            picks,
            best,
        );
        picks.pop();
    }
}

fn soc_after(soc: f64, option: &StorageOption, model: &EfficiencyModel, dt: f64) -> f64 {
    soc + dt * (model.charge_cost(option.charge) - model.discharge_cost(option.discharge))
}

fn soc_ok(soc: f64, net: &NetworkParams) -> bool {
    soc >= net.soc_min_kwh - 1e-9 && soc <= net.soc_max_kwh + 1e-9
}

/// Enumerates the storage grid at step `t` and attaches the best
/// generator/PV completion to each decision.
fn step_options(
    problem: &DispatchProblem,
    model: &EfficiencyModel,
    t: usize,
    step: f64,
) -> Vec<StorageOption> {
    let c = &problem.cost;
    let pv = problem.pv_kw[t];
    let charge_max = problem.bounds.pves_kw.min(pv);
    let discharge_max = problem.esl_cap();
    let charge_steps = (charge_max / step).floor() as i64;
    let discharge_steps = (discharge_max / step).floor() as i64;

    let mut options = Vec::new();
    let mut push = |charge: f64, discharge: f64| {
        if let Some((p_pvl, p_gl, inner)) = best_completion(problem, t, charge, discharge, step) {
            let j2 = c.g3 * model.charge_cost(charge) - c.g4 * model.discharge_cost(discharge);
            options.push(StorageOption {
                charge,
                discharge,
                contribution: inner - c.w2 * j2,
                p_pvl,
                p_gl,
            });
        }
    };
    for k in 0..=charge_steps {
        push(k as f64 * step, 0.0);
    }
    for k in 1..=discharge_steps {
        push(0.0, k as f64 * step);
    }
    options
}

/// Cheapest grid-feasible (p_pvl, p_gl) for a fixed storage decision:
/// scans p_pvl on the grid under the PV limit and picks the smallest
/// generator point that closes the balance within half a step.
fn best_completion(
    problem: &DispatchProblem,
    t: usize,
    charge: f64,
    discharge: f64,
    step: f64,
) -> Option<(f64, f64, f64)> {
    let c = &problem.cost;
    let pv = problem.pv_kw[t];
    let target = problem.network.loss_factor * problem.load_kw[t];
    let pvl_cap = problem.bounds.pvl_kw.min(pv - charge).max(0.0);
    let pvl_steps = (pvl_cap / step + 1e-9).floor() as i64;
    let gen_cap = problem.bounds.gen_kw.min(problem.network.gen_max_kw);
    let gen_steps = (gen_cap / step + 1e-9).floor() as i64;

    let mut best: Option<(f64, f64, f64)> = None;
    for kv in 0..=pvl_steps {
        let v = kv as f64 * step;
        if v + charge > pv + 1e-9 {
            break;
        }
        let g_req = target - v - discharge;
        // Smallest grid generator point within half a step of the balance.
        let k_min = ((g_req - step / 2.0) / step).ceil().max(0.0) as i64;
        if k_min > gen_steps {
            continue;
        }
        let g = k_min as f64 * step;
        if (g + v + discharge - target).abs() > step / 2.0 + 1e-9 {
            continue;
        }
        let inner = c.w1 * crate::objective::generator_cost(g, c) - c.w3 * c.g2 * v;
        if best.as_ref().is_none_or(|(_, _, b)| inner < *b) {
            best = Some((v, g, inner));
        }
    }
    best
}
