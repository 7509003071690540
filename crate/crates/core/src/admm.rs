//! Sequential ADMM solver for the dispatch problem.
//!
//! The problem is brought into a separable standard form with one equality
//! system per step: the bus balance (no slack), the PV split limit (slack
//! `e_pv >= 0`), and the regime-switch constraint (slack `e_reg >= 0`,
//! right-hand side `h_max`). The augmented Lagrangian couples the four flow
//! families and the slacks only through these per-step rows, so every block
//! update decomposes into independent scalar minimizations: closed-form for
//! the quadratic generator block, the linear PV block, and the slacks;
//! Newton-Raphson (with a golden-section fallback) for the nonlinear charge
//! and discharge blocks.
//!
//! The outer loop follows a fixed order each iteration: walk the SOC forward
//! and clamp the storage flows into the remaining headroom/availability,
//! refresh the regime coefficients from the current iterates, run the five
//! block updates, then ascend the duals by `rho` times the residual. The SOC
//! clamp generalizes the binary keep-or-zero projection: flows at steps whose
//! bound would be crossed are cut to the largest feasible value (zero once a
//! bound is exhausted), which gives the loop a fixed point instead of a
//! projection/restore cycle.
//!
//! A solver instance owns its state exclusively and runs single-threaded;
//! distinct instances are independent.

use serde::Serialize;

use crate::battery::{ragone_parameter, RAGONE_VALIDITY_LIMIT};
use crate::error::SolveError;
use crate::microgrid::{regime_coefficients, RegimeCoefficients, Schedule};
use crate::objective::{total_objective_with_model, CostBreakdown};
use crate::problem::{DispatchProblem, EfficiencyModel};

/// Solver knobs. All values must be positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOptions {
    /// ADMM penalty parameter.
    pub rho: f64,
    /// Infinity-norm tolerance on the equality residual, kW.
    pub tol_primal: f64,
    /// Infinity-norm tolerance on the successive-iterate change, kW.
    pub tol_dual: f64,
    /// Outer iteration cap.
    pub max_iters: usize,
    /// Newton stationarity tolerance.
    pub newton_tol: f64,
    /// Newton iteration cap per scalar solve.
    pub newton_max_iters: usize,
    /// Outer iterations between SOC projection passes.
    pub projection_interval: usize,
    /// Record the augmented Lagrangian around every block update.
    pub track_lagrangian: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rho: 1.0,
            tol_primal: 1e-4,
            tol_dual: 1e-4,
            max_iters: 5000,
            newton_tol: 1e-10,
            newton_max_iters: 50,
            projection_interval: 1,
            track_lagrangian: false,
        }
    }
}

/// Failure modes of the scalar Newton solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NewtonError {
    /// Curvature vanished at an iterate; the caller should fall back.
    DegenerateCurvature { at: f64 },
    /// The iterate left the finite range.
    NonFinite { at: f64 },
    /// No root within the iteration cap.
    MaxIterations { last: f64 },
}

/// Newton-Raphson on `f_prime = 0` with explicit curvature.
///
/// Returns `x` with `|f_prime(x)| <= tol`, or a non-convergence signal the
/// caller can act on.
pub fn newton_raphson_scalar(
    f_prime: impl Fn(f64) -> f64,
    f_second: impl Fn(f64) -> f64,
    guess: f64,
    tol: f64,
    max_iters: usize,
) -> Result<f64, NewtonError> {
    let mut x = guess;
    for _ in 0..max_iters {
        let slope = f_prime(x);
        if !slope.is_finite() {
            return Err(NewtonError::NonFinite { at: x });
        }
        if slope.abs() <= tol {
            return Ok(x);
        }
        let curv = f_second(x);
        if !curv.is_finite() {
            return Err(NewtonError::NonFinite { at: x });
        }
        if curv.abs() < 1e-12 {
            return Err(NewtonError::DegenerateCurvature { at: x });
        }
        x -= slope / curv;
        if !x.is_finite() {
            return Err(NewtonError::NonFinite { at: x });
        }
    }
    if f_prime(x).abs() <= tol {
        Ok(x)
    } else {
        Err(NewtonError::MaxIterations { last: x })
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section_min(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iters: usize,
) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iters {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// The dispatch problem in separable standard form.
///
/// Per step the equality system holds three rows over the four flow columns
/// and two slack columns:
///
/// ```text
/// balance:  p_gl + p_pvl + p_esl                   = loss_factor * load
/// pv:       p_pvl + p_pves + e_pv                  = p_pv
/// regime:   n1 * p_pves + n2 * p_esl + e_reg       = h_max
/// ```
///
/// so the full system has `3N` rows, `4N` flow columns, and `2N` slack
/// columns, with each slack appearing once with unit coefficient. Box bounds
/// are enforced by clipping inside the block updates.
#[derive(Debug, Clone)]
pub struct StandardProblem {
    pub horizon: usize,
    pub dt_hours: f64,
    /// Balance right-hand side per step, `loss_factor * load`.
    pub balance_rhs: Vec<f64>,
    /// PV right-hand side per step.
    pub pv_rhs: Vec<f64>,
    /// Regime right-hand side (`h_max`).
    pub regime_rhs: f64,
    /// Regime coefficients per step, refreshed from the iterates.
    pub regime: Vec<RegimeCoefficients>,
    /// Box upper bounds per family (generator lower bound may be nonzero).
    pub gen_lo: f64,
    pub gen_hi: f64,
    pub pvl_hi: Vec<f64>,
    pub pves_hi: Vec<f64>,
    pub esl_hi: f64,
    /// SOC bounds and start.
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_initial: f64,
    /// Objective coefficients.
    pub gen_quad: f64,
    pub gen_lin: f64,
    pub pvl_slope: f64,
    pub charge_weight: f64,
    pub discharge_weight: f64,
    /// Storage cost model.
    pub model: EfficiencyModel,
}

impl StandardProblem {
    pub fn rows(&self) -> usize {
        3 * self.horizon
    }

    pub fn flow_cols(&self) -> usize {
        4 * self.horizon
    }

    pub fn slack_cols(&self) -> usize {
        2 * self.horizon
    }

    /// Generator block objective at one step.
    pub fn f1(&self, p_gl: f64) -> f64 {
        self.gen_quad * p_gl * p_gl + self.gen_lin * p_gl
    }

    /// PV-to-load block objective at one step.
    pub fn f2(&self, p_pvl: f64) -> f64 {
        -self.pvl_slope * p_pvl
    }

    /// Charge block objective at one step.
    pub fn f3(&self, p_pves: f64) -> f64 {
        -self.charge_weight * self.model.charge_cost(p_pves)
    }

    /// Discharge block objective at one step.
    pub fn f4(&self, p_esl: f64) -> f64 {
        self.discharge_weight * self.model.discharge_cost(p_esl)
    }

    /// Sum of the block objectives over the horizon.
    pub fn objective(&self, st: &AdmmState) -> f64 {
        (0..self.horizon)
            .map(|t| {
                self.f1(st.p_gl[t]) + self.f2(st.p_pvl[t]) + self.f3(st.p_pves[t])
                    + self.f4(st.p_esl[t])
            })
            .sum()
    }

    /// Equality residual, one entry per row, ordered (balance, pv, regime)
    /// per step.
    pub fn residual(&self, st: &AdmmState) -> Vec<f64> {
        let mut r = Vec::with_capacity(self.rows());
        for t in 0..self.horizon {
            r.push(st.p_gl[t] + st.p_pvl[t] + st.p_esl[t] - self.balance_rhs[t]);
            r.push(st.p_pvl[t] + st.p_pves[t] + st.eps_pv[t] - self.pv_rhs[t]);
            r.push(
                self.regime[t].n1 * st.p_pves[t] + self.regime[t].n2 * st.p_esl[t]
                    + st.eps_reg[t]
                    - self.regime_rhs,
            );
        }
        r
    }

    /// Refreshes the regime coefficients from the current iterates and clamps
    /// the newly suppressed flow under the regime ceiling.
    pub fn refresh_regime(&mut self, st: &mut AdmmState) {
        for t in 0..self.horizon {
            self.regime[t] = regime_coefficients(st.p_pves[t], st.p_esl[t]);
            if self.regime[t].n1 == 1.0 {
                st.p_pves[t] = st.p_pves[t].min(self.regime_rhs);
            } else {
                st.p_esl[t] = st.p_esl[t].min(self.regime_rhs);
            }
        }
    }
}

/// Converts a dispatch problem into standard form with the given storage
/// model. Regime rows start from the all-zero iterate (tie: discharge
/// suppressed); slack targets come from the PV series and `h_max`.
pub fn assemble_problem_with_model(
    problem: &DispatchProblem,
    model: EfficiencyModel,
) -> Result<StandardProblem, SolveError> {
    problem.validate()?;
    let n = problem.horizon();
    let c = &problem.cost;
    Ok(StandardProblem {
        horizon: n,
        dt_hours: problem.dt_hours,
        balance_rhs: problem
            .load_kw
            .iter()
            .map(|l| problem.network.loss_factor * l)
            .collect(),
        pv_rhs: problem.pv_kw.clone(),
        regime_rhs: problem.network.h_max_kw,
        regime: vec![regime_coefficients(0.0, 0.0); n],
        gen_lo: problem.network.gen_min_kw,
        gen_hi: problem.bounds.gen_kw.min(problem.network.gen_max_kw),
        pvl_hi: problem
            .pv_kw
            .iter()
            .map(|pv| problem.bounds.pvl_kw.min(*pv))
            .collect(),
        pves_hi: problem
            .pv_kw
            .iter()
            .map(|pv| problem.bounds.pves_kw.min(*pv))
            .collect(),
        esl_hi: problem.esl_cap(),
        soc_min: problem.network.soc_min_kwh,
        soc_max: problem.network.soc_max_kwh,
        soc_initial: problem.network.soc_initial_kwh,
        gen_quad: c.w1 * c.g1 * c.a,
        gen_lin: c.w1 * c.g1 * c.b,
        pvl_slope: c.w3 * c.g2,
        charge_weight: c.w2 * c.g3,
        discharge_weight: c.w2 * c.g4,
        model,
    })
}

/// Standard-form assembly with the rate-dependent storage model.
pub fn assemble_problem(problem: &DispatchProblem) -> Result<StandardProblem, SolveError> {
    assemble_problem_with_model(problem, EfficiencyModel::Dynamic(problem.battery.clone()))
}

/// Solver state: block iterates, slacks, duals, penalty, and histories.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub p_gl: Vec<f64>,
    pub p_pvl: Vec<f64>,
    pub p_pves: Vec<f64>,
    pub p_esl: Vec<f64>,
    pub eps_pv: Vec<f64>,
    pub eps_reg: Vec<f64>,
    /// Balance-row multipliers.
    pub mu_balance: Vec<f64>,
    /// PV-row multipliers.
    pub mu_pv: Vec<f64>,
    /// Regime-row multipliers.
    pub mu_regime: Vec<f64>,
    pub rho: f64,
    pub iteration: usize,
    pub primal_history: Vec<f64>,
    pub dual_history: Vec<f64>,
    /// SOC-derived charge box per step, refreshed by the projection pass.
    pub charge_cap: Vec<f64>,
    /// SOC-derived discharge box per step.
    pub discharge_cap: Vec<f64>,
}

impl AdmmState {
    /// Cold start: zero flows, slacks chosen to satisfy the PV and regime
    /// rows, zero duals.
    pub fn cold_start(sp: &StandardProblem, rho: f64) -> Self {
        let n = sp.horizon;
        Self {
            p_gl: vec![0.0; n],
            p_pvl: vec![0.0; n],
            p_pves: vec![0.0; n],
            p_esl: vec![0.0; n],
            eps_pv: sp.pv_rhs.clone(),
            eps_reg: vec![sp.regime_rhs; n],
            mu_balance: vec![0.0; n],
            mu_pv: vec![0.0; n],
            mu_regime: vec![0.0; n],
            rho,
            iteration: 0,
            primal_history: Vec::new(),
            dual_history: Vec::new(),
            charge_cap: sp.pves_hi.clone(),
            discharge_cap: vec![sp.esl_hi; n],
        }
    }

    /// Dual vector of length `3N`, ordered (balance, pv, regime) per step.
    pub fn dual_vector(&self) -> Vec<f64> {
        let mut mu = Vec::with_capacity(3 * self.mu_balance.len());
        for t in 0..self.mu_balance.len() {
            mu.push(self.mu_balance[t]);
            mu.push(self.mu_pv[t]);
            mu.push(self.mu_regime[t]);
        }
        mu
    }

    fn snapshot(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(6 * self.p_gl.len());
        for series in [
            &self.p_gl,
            &self.p_pvl,
            &self.p_pves,
            &self.p_esl,
            &self.eps_pv,
            &self.eps_reg,
        ] {
            v.extend_from_slice(series);
        }
        v
    }
}

/// Augmented Lagrangian `sum f + mu . r + (rho/2) |r|^2`.
pub fn augmented_lagrangian(sp: &StandardProblem, st: &AdmmState) -> f64 {
    let r = sp.residual(st);
    let mu = st.dual_vector();
    let linear: f64 = mu.iter().zip(&r).map(|(m, x)| m * x).sum();
    let quad: f64 = r.iter().map(|x| x * x).sum();
    sp.objective(st) + linear + 0.5 * st.rho * quad
}

/// Blocks with closed-form scalar minimizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadraticBlock {
    Generator,
    PvToLoad,
    Slacks,
}

/// Blocks minimized by Newton-Raphson on the stationarity equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StorageBlock {
    Charge,
    Discharge,
}

/// Exact minimization of the augmented Lagrangian in one quadratic block,
/// holding the other blocks fixed, then clipped to the box. Each step's
/// scalar subproblem is independent.
pub fn block_update_quadratic(block: QuadraticBlock, st: &mut AdmmState, sp: &StandardProblem) {
    let rho = st.rho;
    match block {
        QuadraticBlock::Generator => {
            for t in 0..sp.horizon {
                let rest = st.p_pvl[t] + st.p_esl[t] - sp.balance_rhs[t];
                let stationary = (-sp.gen_lin - st.mu_balance[t] - rho * rest)
                    / (2.0 * sp.gen_quad + rho);
                st.p_gl[t] = stationary.clamp(sp.gen_lo, sp.gen_hi);
            }
        }
        QuadraticBlock::PvToLoad => {
            for t in 0..sp.horizon {
                let rest_bal = st.p_gl[t] + st.p_esl[t] - sp.balance_rhs[t];
                let rest_pv = st.p_pves[t] + st.eps_pv[t] - sp.pv_rhs[t];
                let stationary = (sp.pvl_slope
                    - st.mu_balance[t]
                    - st.mu_pv[t]
                    - rho * (rest_bal + rest_pv))
                    / (2.0 * rho);
                st.p_pvl[t] = stationary.clamp(0.0, sp.pvl_hi[t]);
            }
        }
        QuadraticBlock::Slacks => {
            for t in 0..sp.horizon {
                let rest_pv = st.p_pvl[t] + st.p_pves[t] - sp.pv_rhs[t];
                st.eps_pv[t] = (-st.mu_pv[t] / rho - rest_pv).max(0.0);
                let rest_reg = sp.regime[t].n1 * st.p_pves[t] + sp.regime[t].n2 * st.p_esl[t]
                    - sp.regime_rhs;
                st.eps_reg[t] = (-st.mu_regime[t] / rho - rest_reg).max(0.0);
            }
        }
    }
}

/// Exact minimization in a storage block: per step, the scalar stationarity
/// equation is solved by Newton-Raphson from the previous iterate (closed
/// form when the storage cost is linear), with a golden-section fallback, and
/// the result is clipped to the box. The regime ceiling tightens the box of
/// the suppressed flow.
pub fn block_update_storage(
    block: StorageBlock,
    st: &mut AdmmState,
    sp: &StandardProblem,
    opts: &SolverOptions,
) {
    let rho = st.rho;
    for t in 0..sp.horizon {
        match block {
            StorageBlock::Charge => {
                let n1 = sp.regime[t].n1;
                let hi = if n1 == 1.0 {
                    st.charge_cap[t].min(sp.regime_rhs)
                } else {
                    st.charge_cap[t]
                };
                let rest_pv = st.p_pvl[t] + st.eps_pv[t] - sp.pv_rhs[t];
                let rest_reg = sp.regime[t].n2 * st.p_esl[t] + st.eps_reg[t] - sp.regime_rhs;
                let lin = st.mu_pv[t] + n1 * st.mu_regime[t];
                let d1 = |c: f64| {
                    -sp.charge_weight * sp.model.charge_cost_d1(c)
                        + lin
                        + rho * (c + rest_pv)
                        + rho * n1 * (n1 * c + rest_reg)
                };
                let d2 = |c: f64| -sp.charge_weight * sp.model.charge_cost_d2(c) + rho * (1.0 + n1);
                let value = |c: f64| {
                    -sp.charge_weight * sp.model.charge_cost(c)
                        + lin * c
                        + 0.5 * rho * (c + rest_pv).powi(2)
                        + 0.5 * rho * (n1 * c + rest_reg).powi(2)
                };
                st.p_pves[t] = if let Some(slope) = sp.model.linear_charge_slope() {
                    let stationary = (sp.charge_weight * slope
                        - lin
                        - rho * (rest_pv + n1 * rest_reg))
                        / (rho * (1.0 + n1));
                    stationary.clamp(0.0, hi)
                } else {
                    minimize_scalar(&d1, &d2, &value, 0.0, hi, st.p_pves[t], opts)
                };
            }
            StorageBlock::Discharge => {
                let n2 = sp.regime[t].n2;
                let hi = if n2 == 1.0 {
                    st.discharge_cap[t].min(sp.regime_rhs)
                } else {
                    st.discharge_cap[t]
                };
                let rest_bal = st.p_gl[t] + st.p_pvl[t] - sp.balance_rhs[t];
                let rest_reg = sp.regime[t].n1 * st.p_pves[t] + st.eps_reg[t] - sp.regime_rhs;
                let lin = st.mu_balance[t] + n2 * st.mu_regime[t];
                let d1 = |d: f64| {
                    sp.discharge_weight * sp.model.discharge_cost_d1(d)
                        + lin
                        + rho * (d + rest_bal)
                        + rho * n2 * (n2 * d + rest_reg)
                };
                let d2 = |d: f64| {
                    sp.discharge_weight * sp.model.discharge_cost_d2(d) + rho * (1.0 + n2)
                };
                let value = |d: f64| {
                    sp.discharge_weight * sp.model.discharge_cost(d)
                        + lin * d
                        + 0.5 * rho * (d + rest_bal).powi(2)
                        + 0.5 * rho * (n2 * d + rest_reg).powi(2)
                };
                st.p_esl[t] = if let Some(slope) = sp.model.linear_discharge_slope() {
                    let stationary = (-sp.discharge_weight * slope
                        - lin
                        - rho * (rest_bal + n2 * rest_reg))
                        / (rho * (1.0 + n2));
                    stationary.clamp(0.0, hi)
                } else {
                    minimize_scalar(&d1, &d2, &value, 0.0, hi, st.p_esl[t], opts)
                };
            }
        }
    }
}

/// Scalar minimizer on a box: endpoint derivative checks, then Newton from
/// the warm start, then golden section if Newton fails or leaves the box.
/// Never returns a point worse than the incumbent.
fn minimize_scalar(
    d1: &impl Fn(f64) -> f64,
    d2: &impl Fn(f64) -> f64,
    value: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    warm: f64,
    opts: &SolverOptions,
) -> f64 {
    let incumbent = warm.clamp(lo, hi);
    if hi - lo <= 1e-15 {
        return lo.max(0.0);
    }
    let candidate = if d1(lo) >= 0.0 {
        lo
    } else if d1(hi) <= 0.0 {
        hi
    } else {
        match newton_raphson_scalar(d1, d2, incumbent, opts.newton_tol, opts.newton_max_iters) {
            Ok(root) if root >= lo - 1e-9 && root <= hi + 1e-9 => root.clamp(lo, hi),
            _ => golden_section_min(value, lo, hi, 1e-12, 200),
        }
    };
    if value(candidate) <= value(incumbent) {
        candidate
    } else {
        incumbent
    }
}

/// Dual ascent: `mu += rho * residual` on every row. The penalty scaling is
/// the standard scaled step; `rho = 1` recovers the unscaled form.
pub fn dual_update(st: &mut AdmmState, sp: &StandardProblem) {
    for t in 0..sp.horizon {
        let r_bal = st.p_gl[t] + st.p_pvl[t] + st.p_esl[t] - sp.balance_rhs[t];
        let r_pv = st.p_pvl[t] + st.p_pves[t] + st.eps_pv[t] - sp.pv_rhs[t];
        let r_reg = sp.regime[t].n1 * st.p_pves[t] + sp.regime[t].n2 * st.p_esl[t]
            + st.eps_reg[t]
            - sp.regime_rhs;
        st.mu_balance[t] += st.rho * r_bal;
        st.mu_pv[t] += st.rho * r_pv;
        st.mu_regime[t] += st.rho * r_reg;
    }
}

/// Convergence verdict and residual norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceCheck {
    pub converged: bool,
    /// Infinity norm of the equality residual.
    pub primal_residual: f64,
    /// Infinity norm of the successive-iterate change.
    pub dual_residual: f64,
}

/// Evaluates the stopping rule from the current residual and iterate change.
pub fn convergence_check(
    st: &AdmmState,
    sp: &StandardProblem,
    iterate_change: f64,
    opts: &SolverOptions,
) -> ConvergenceCheck {
    let primal = sp
        .residual(st)
        .iter()
        .fold(0.0f64, |acc, r| acc.max(r.abs()));
    ConvergenceCheck {
        converged: primal <= opts.tol_primal && iterate_change <= opts.tol_dual,
        primal_residual: primal,
        dual_residual: iterate_change,
    }
}

/// One line of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_residual: f64,
    pub objective: f64,
}

/// Convergence diagnostics of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Per-iteration residual/objective log.
    pub iteration_log: Vec<IterationRecord>,
    /// Largest increase of the augmented Lagrangian across any block update,
    /// when tracking is enabled.
    pub max_lagrangian_increase: Option<f64>,
    pub warnings: Vec<String>,
}

/// A solved dispatch: schedule, cost breakdown, and diagnostics.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub schedule: Schedule,
    pub breakdown: CostBreakdown,
    pub diagnostics: Diagnostics,
}

/// Solves the dispatch problem with the rate-dependent storage model.
pub fn solve(problem: &DispatchProblem, opts: &SolverOptions) -> Result<SolveOutcome, SolveError> {
    solve_with_model(
        problem,
        EfficiencyModel::Dynamic(problem.battery.clone()),
        opts,
    )
}

/// Solves the dispatch problem with an explicit storage model (used by the
/// static-efficiency baseline).
pub fn solve_with_model(
    problem: &DispatchProblem,
    model: EfficiencyModel,
    opts: &SolverOptions,
) -> Result<SolveOutcome, SolveError> {
    problem.feasibility_check()?;
    let mut sp = assemble_problem_with_model(problem, model)?;
    let mut st = AdmmState::cold_start(&sp, opts.rho);
    let n = sp.horizon;

    let mut warnings = Vec::new();
    if let EfficiencyModel::Dynamic(b) = &sp.model {
        if !ragone_parameter(b.p_max, b).regime_valid {
            warnings.push(format!(
                "convexity regime violated (alpha * p_max = {:.3e} > {:.0e}); \
                 global optimality not guaranteed",
                b.alpha * b.p_max,
                RAGONE_VALIDITY_LIMIT
            ));
        }
    }

    let mut log = Vec::new();
    let mut max_l_increase = f64::NEG_INFINITY;
    let mut prev_snapshot = st.snapshot();
    let mut converged = false;
    let mut best_primal = f64::INFINITY;
    let mut best_state: Option<AdmmState> = None;

    for iter in 0..opts.max_iters {
        st.iteration = iter + 1;

        if iter % opts.projection_interval.max(1) == 0 {
            apply_soc_boxes(&mut st, &sp);
        }
        sp.refresh_regime(&mut st);

        if opts.track_lagrangian {
            let mut l_prev = augmented_lagrangian(&sp, &st);
            block_update_quadratic(QuadraticBlock::Generator, &mut st, &sp);
            l_prev = track_step(&sp, &st, l_prev, &mut max_l_increase);
            block_update_quadratic(QuadraticBlock::PvToLoad, &mut st, &sp);
            l_prev = track_step(&sp, &st, l_prev, &mut max_l_increase);
            block_update_storage(StorageBlock::Charge, &mut st, &sp, opts);
            l_prev = track_step(&sp, &st, l_prev, &mut max_l_increase);
            block_update_storage(StorageBlock::Discharge, &mut st, &sp, opts);
            l_prev = track_step(&sp, &st, l_prev, &mut max_l_increase);
            block_update_quadratic(QuadraticBlock::Slacks, &mut st, &sp);
            track_step(&sp, &st, l_prev, &mut max_l_increase);
        } else {
            block_update_quadratic(QuadraticBlock::Generator, &mut st, &sp);
            block_update_quadratic(QuadraticBlock::PvToLoad, &mut st, &sp);
            block_update_storage(StorageBlock::Charge, &mut st, &sp, opts);
            block_update_storage(StorageBlock::Discharge, &mut st, &sp, opts);
            block_update_quadratic(QuadraticBlock::Slacks, &mut st, &sp);
        }

        dual_update(&mut st, &sp);

        let snapshot = st.snapshot();
        let change = snapshot
            .iter()
            .zip(&prev_snapshot)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        prev_snapshot = snapshot;

        let check = convergence_check(&st, &sp, change, opts);
        st.primal_history.push(check.primal_residual);
        st.dual_history.push(check.dual_residual);
        log.push(IterationRecord {
            iteration: iter + 1,
            primal_residual: check.primal_residual,
            objective: sp.objective(&st),
        });

        if check.primal_residual < best_primal {
            best_primal = check.primal_residual;
            best_state = Some(st.clone());
        }
        if check.converged {
            converged = true;
            break;
        }
    }

    if !converged {
        if let Some(best) = best_state {
            st = best;
        }
        warnings.push(format!(
            "not converged after {} iterations (best primal residual {:.3e})",
            opts.max_iters, best_primal
        ));
    }

    // Final reconciliation: clamp the storage flows into the exact SOC
    // headroom, cover any discharge cut with the generator, and resync the
    // slacks so the reported residuals reflect the returned schedule.
    let esl_before: Vec<f64> = st.p_esl.clone();
    apply_soc_boxes(&mut st, &sp);
    for (t, &before) in esl_before.iter().enumerate() {
        let cut = before - st.p_esl[t];
        if cut > 0.0 {
            st.p_gl[t] = (st.p_gl[t] + cut).min(sp.gen_hi);
        }
        st.eps_pv[t] = (sp.pv_rhs[t] - st.p_pvl[t] - st.p_pves[t]).max(0.0);
        st.eps_reg[t] = (sp.regime_rhs
            - sp.regime[t].n1 * st.p_pves[t]
            - sp.regime[t].n2 * st.p_esl[t])
            .max(0.0);
    }

    let final_primal = sp
        .residual(&st)
        .iter()
        .fold(0.0f64, |acc, r| acc.max(r.abs()));

    let soc = trajectory(&st, &sp);
    let schedule = Schedule {
        dt_hours: sp.dt_hours,
        p_gl: st.p_gl.clone(),
        p_pvl: st.p_pvl.clone(),
        p_pves: st.p_pves.clone(),
        p_esl: st.p_esl.clone(),
        soc,
    };
    let breakdown = total_objective_with_model(&schedule, &problem.load_kw, &sp.model, &problem.cost)?;

    Ok(SolveOutcome {
        schedule,
        breakdown,
        diagnostics: Diagnostics {
            iterations: st.iteration,
            converged,
            primal_residual: final_primal,
            dual_residual: st.dual_history.last().copied().unwrap_or(f64::INFINITY),
            iteration_log: log,
            max_lagrangian_increase: opts.track_lagrangian.then_some(max_l_increase),
            warnings,
        },
    })
}

fn track_step(sp: &StandardProblem, st: &AdmmState, l_prev: f64, max_inc: &mut f64) -> f64 {
    let l_now = augmented_lagrangian(sp, st);
    *max_inc = max_inc.max(l_now - l_prev);
    l_now
}

/// SOC projection pass: walk the trajectory forward and clamp each step's
/// storage flows into the remaining headroom (charge) and availability
/// (discharge), recording the resulting boxes for the block updates. Flows at
/// steps whose bound is exhausted drop to zero, the limiting case of the
/// keep-or-zero projection; the step at the boundary keeps the largest
/// feasible flow so the bound is filled exactly rather than overshot.
fn apply_soc_boxes(st: &mut AdmmState, sp: &StandardProblem) {
    let mut soc = sp.soc_initial;
    for t in 0..sp.horizon {
        let headroom = (sp.soc_max - soc).max(0.0);
        let available = (soc - sp.soc_min).max(0.0);
        let c_cap = sp
            .model
            .max_charge_for_headroom(headroom, sp.dt_hours, sp.pves_hi[t]);
        let d_cap = sp
            .model
            .max_discharge_for_available(available, sp.dt_hours, sp.esl_hi);
        st.charge_cap[t] = c_cap;
        st.discharge_cap[t] = d_cap;
        st.p_pves[t] = st.p_pves[t].min(c_cap);
        st.p_esl[t] = st.p_esl[t].min(d_cap);
        soc += sp.dt_hours
            * (sp.model.charge_cost(st.p_pves[t]) - sp.model.discharge_cost(st.p_esl[t]));
        soc = soc.clamp(sp.soc_min, sp.soc_max);
    }
}

/// SOC trajectory of the current iterate under the problem's storage model.
fn trajectory(st: &AdmmState, sp: &StandardProblem) -> Vec<f64> {
    let mut soc = Vec::with_capacity(sp.horizon + 1);
    let mut current = sp.soc_initial;
    soc.push(current);
    for t in 0..sp.horizon {
        current += sp.dt_hours
            * (sp.model.charge_cost(st.p_pves[t]) - sp.model.discharge_cost(st.p_esl[t]));
        soc.push(current);
    }
    soc
}
