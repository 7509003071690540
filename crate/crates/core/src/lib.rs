//! Degradation-aware economic dispatch for a PV-diesel-battery microgrid.
//!
//! The library models a single-bus hybrid system in which a diesel generator,
//! a PV array, and a battery bank jointly serve a load. The battery model uses
//! semi-empirical capacity-fade curves, which make the charge and discharge
//! efficiencies depend on the power flowing through the pack. Those
//! rate-dependent efficiencies feed a cost model whose storage terms stay
//! convex inside an auditable operating regime, and the resulting dispatch
//! problem is solved with a sequential ADMM whose nonlinear storage blocks are
//! minimized by scalar Newton-Raphson.
//!
//! Module map:
//! - [`battery`]: capacity fade, cell currents/energies, dynamic efficiencies,
//!   storage cost functions, and the numerical convexity audit.
//! - [`microgrid`]: PV output, power balance, SOC dynamics, regime switching,
//!   and the SOC projection rule.
//! - [`objective`]: the weighted cost components and the total objective.
//! - [`problem`]: dispatch problem assembly, validation, and the efficiency
//!   model abstraction shared by the proposed and static solvers.
//! - [`admm`]: standard-form assembly, block updates, dual ascent, and the
//!   outer solve loop.
//! - [`baselines`]: diesel-only and static-efficiency baselines, savings
//!   reports, and the brute-force verification oracle.
//! - [`series`], [`synth`]: load/irradiance time series ingestion and
//!   deterministic synthetic profiles.
//! - [`config`], [`scenario`], [`report`]: scenario configuration, end-to-end
//!   runs, and emitted artifacts.

pub mod admm;
pub mod baselines;
pub mod battery;
pub mod config;
pub mod error;
pub mod microgrid;
pub mod objective;
pub mod problem;
pub mod report;
pub mod scenario;
pub mod series;
pub mod synth;

pub use admm::{solve, AdmmState, SolveOutcome, SolverOptions, StandardProblem};
pub use baselines::{
    brute_force_oracle, diesel_only_dispatch, savings_report, static_hybrid_dispatch,
    SavingsReport,
};
pub use battery::{convexity_audit, BatteryParams, CellState, ConvexityAudit};
pub use error::{ConfigError, DomainError, SeriesError, SolveError};
pub use microgrid::{NetworkParams, PvParams, Schedule};
pub use objective::{total_objective, CostBreakdown, CostParams};
pub use problem::{DispatchProblem, EfficiencyModel, FlowBounds};
pub use report::DispatchReport;
pub use scenario::{run_scenario, ScenarioOutcome};
pub use series::TimeSeries;
pub use synth::{synth_profile, SynthKind, SynthParams};
