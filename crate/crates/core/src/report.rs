//! Emitted artifacts of a dispatch run: the per-strategy report plus the
//! schedule/cost/savings writers.

use std::path::Path;

use serde::Serialize;

use crate::admm::Diagnostics;
use crate::baselines::SavingsReport;
use crate::error::ScenarioError;
use crate::microgrid::Schedule;
use crate::objective::CostBreakdown;

/// Result of one strategy: cost breakdown, savings when all strategies ran,
/// and convergence diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct DispatchReport {
    pub strategy: String,
    pub breakdown: CostBreakdown,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub savings: Option<SavingsReport>,
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub warnings: Vec<String>,
}

impl DispatchReport {
    pub fn from_diagnostics(
        strategy: &str,
        breakdown: CostBreakdown,
        diagnostics: &Diagnostics,
    ) -> Self {
        Self {
            strategy: strategy.to_string(),
            breakdown,
            savings: None,
            converged: diagnostics.converged,
            iterations: diagnostics.iterations,
            primal_residual: diagnostics.primal_residual,
            warnings: diagnostics.warnings.clone(),
        }
    }

    /// A report for a closed-form strategy with no iterative diagnostics.
    pub fn direct(strategy: &str, breakdown: CostBreakdown) -> Self {
        Self {
            strategy: strategy.to_string(),
            breakdown,
            savings: None,
            converged: true,
            iterations: 0,
            primal_residual: 0.0,
            warnings: Vec::new(),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ScenarioError> {
    std::fs::write(path, contents).map_err(|source| ScenarioError::Output {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the per-step schedule CSV: `t,p_gl_kw,p_pvl_kw,p_pves_kw,p_esl_kw,
/// soc_kwh`, with the SOC at the end of each step.
pub fn write_schedule_csv(schedule: &Schedule, path: &Path) -> Result<(), ScenarioError> {
    let mut out = String::from("t,p_gl_kw,p_pvl_kw,p_pves_kw,p_esl_kw,soc_kwh\n");
    for t in 0..schedule.horizon() {
        out.push_str(&format!(
            "{t},{},{},{},{},{}\n",
            schedule.p_gl[t],
            schedule.p_pvl[t],
            schedule.p_pves[t],
            schedule.p_esl[t],
            schedule.soc[t + 1],
        ));
    }
    write_file(path, &out)
}

/// Writes a report as pretty JSON.
pub fn write_report_json(report: &DispatchReport, path: &Path) -> Result<(), ScenarioError> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(path, &(json + "\n"))
}

/// Writes the savings comparison as pretty JSON.
pub fn write_savings_json(savings: &SavingsReport, path: &Path) -> Result<(), ScenarioError> {
    let json = serde_json::to_string_pretty(savings).expect("savings serializes");
    write_file(path, &(json + "\n"))
}

/// Writes the convergence log: one line per iteration with the iteration
/// index, primal residual, and objective.
pub fn write_convergence_log(
    diagnostics: &Diagnostics,
    path: &Path,
) -> Result<(), ScenarioError> {
    let mut out = String::from("iter primal_residual objective\n");
    for record in &diagnostics.iteration_log {
        out.push_str(&format!(
            "{} {:.9e} {:.9e}\n",
            record.iteration, record.primal_residual, record.objective
        ));
    }
    write_file(path, &out)
}

/// Writes the strategy-cost bar-chart data: one row per strategy.
pub fn write_strategy_costs_csv(
    rows: &[(String, f64)],
    path: &Path,
) -> Result<(), ScenarioError> {
    let mut out = String::from("strategy,objective\n");
    for (name, cost) in rows {
        out.push_str(&format!("{name},{cost}\n"));
    }
    write_file(path, &out)
}
