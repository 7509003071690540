//! End-to-end scenario runs: series ingestion, problem assembly, strategy
//! execution, and artifact emission.
//!
//! A run is atomic with respect to its outputs: configuration, series, and
//! solver results are all validated before the first file is written. In
//! `all` mode the three strategies solve concurrently (they share nothing
//! but the immutable problem); writes are serialized afterwards. Identical
//! inputs produce byte-identical artifacts.

use std::path::{Path, PathBuf};

use crate::admm::{solve, Diagnostics, SolveOutcome};
use crate::baselines::{diesel_only_dispatch, savings_report, static_hybrid_dispatch, SavingsReport};
use crate::config::{RunMode, ScenarioConfig};
use crate::error::{ConfigError, ScenarioError};
use crate::microgrid::{pv_output, Schedule};
use crate::objective::total_objective;
use crate::problem::{DispatchProblem, FlowBounds};
use crate::report::{
    write_convergence_log, write_report_json, write_savings_json, write_schedule_csv,
    write_strategy_costs_csv, DispatchReport,
};
use crate::series::{parse_irradiance_csv, parse_load_csv};

/// One executed strategy.
#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub name: String,
    pub report: DispatchReport,
    pub schedule: Schedule,
    /// Objective of this schedule under the rate-dependent model, the common
    /// yardstick for savings.
    pub objective_dynamic: f64,
    pub diagnostics: Option<Diagnostics>,
}

/// Everything a scenario run produced.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub problem: DispatchProblem,
    pub runs: Vec<StrategyRun>,
    pub savings: Option<SavingsReport>,
    pub out_dir: PathBuf,
    pub all_converged: bool,
}

/// Runs the configured scenario and writes its artifacts.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome, ScenarioError> {
    let problem = build_problem(config)?;
    problem.validate()?;

    let modes: Vec<RunMode> = match config.mode {
        RunMode::All => vec![RunMode::DieselOnly, RunMode::NoDegradation, RunMode::Proposed],
        single => vec![single],
    };

    // Solve everything before touching the filesystem.
    let mut runs: Vec<StrategyRun> = if config.mode == RunMode::All {
        let (diesel, fixed, proposed) = std::thread::scope(|scope| {
            let diesel = scope.spawn(|| run_diesel(&problem));
            let fixed = scope.spawn(|| run_static(&problem, config));
            let proposed = scope.spawn(|| run_proposed(&problem, config));
            (
                diesel.join().expect("diesel strategy panicked"),
                fixed.join().expect("static strategy panicked"),
                proposed.join().expect("proposed strategy panicked"),
            )
        });
        vec![diesel?, fixed?, proposed?]
    } else {
        let mut runs = Vec::new();
        for mode in &modes {
            runs.push(match mode {
                RunMode::DieselOnly => run_diesel(&problem)?,
                RunMode::NoDegradation => run_static(&problem, config)?,
                RunMode::Proposed => run_proposed(&problem, config)?,
                RunMode::All => unreachable!(),
            });
        }
        runs
    };

    // Post-run validation pass: no emitted schedule may violate the model
    // invariants at the solver tolerance.
    let flow_tol = config.solver.tol_primal.max(1e-9) * (1.0 + 1e-9);
    for run in &runs {
        let violations = problem.schedule_violations(&run.schedule, flow_tol, 1e-6);
        if !violations.is_empty() {
            return Err(ScenarioError::InvalidSchedule(format!(
                "{}: {}",
                run.name,
                violations.join("; ")
            )));
        }
    }

    let savings = if config.mode == RunMode::All {
        let scenario_label = config
            .out_dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        let report = savings_report(
            &scenario_label,
            runs[0].objective_dynamic,
            runs[1].objective_dynamic,
            runs[2].objective_dynamic,
        );
        for run in &mut runs {
            if run.name == "proposed" {
                run.report.savings = Some(report.clone());
            }
        }
        Some(report)
    } else {
        None
    };

    std::fs::create_dir_all(&config.out_dir).map_err(|source| ScenarioError::Output {
        path: config.out_dir.display().to_string(),
        source,
    })?;
    for run in &runs {
        let stem = run.name.replace('-', "_");
        write_schedule_csv(
            &run.schedule,
            &config.out_dir.join(format!("schedule_{stem}.csv")),
        )?;
        write_report_json(
            &run.report,
            &config.out_dir.join(format!("costs_{stem}.json")),
        )?;
        if let Some(diagnostics) = &run.diagnostics {
            write_convergence_log(
                diagnostics,
                &config.out_dir.join(format!("convergence_{stem}.log")),
            )?;
        }
    }
    if let Some(report) = &savings {
        write_savings_json(report, &config.out_dir.join("savings.json"))?;
    }

    let outcome = ScenarioOutcome {
        all_converged: runs.iter().all(|r| r.report.converged),
        problem,
        runs,
        savings,
        out_dir: config.out_dir.clone(),
    };
    if config.emit_plot_data {
        emit_plot_data(&outcome, &config.out_dir)?;
    }
    Ok(outcome)
}

/// Emits the figure-analog CSVs: one flow profile per strategy and the
/// strategy-cost bar data.
pub fn emit_plot_data(outcome: &ScenarioOutcome, out_dir: &Path) -> Result<(), ScenarioError> {
    std::fs::create_dir_all(out_dir).map_err(|source| ScenarioError::Output {
        path: out_dir.display().to_string(),
        source,
    })?;
    for run in &outcome.runs {
        let stem = run.name.replace('-', "_");
        write_schedule_csv(&run.schedule, &out_dir.join(format!("flows_{stem}.csv")))?;
    }
    let rows: Vec<(String, f64)> = outcome
        .runs
        .iter()
        .map(|run| (run.name.clone(), run.objective_dynamic))
        .collect();
    write_strategy_costs_csv(&rows, &out_dir.join("strategy_costs.csv"))
}

/// Assembles the dispatch problem from the configured series.
pub fn build_problem(config: &ScenarioConfig) -> Result<DispatchProblem, ScenarioError> {
    let load = parse_load_csv(&config.load_csv).map_err(ConfigError::Series)?;
    let irradiance = parse_irradiance_csv(&config.irradiance_csv).map_err(ConfigError::Series)?;
    let (load, irradiance) = if config.daily_mean {
        (
            load.daily_mean(&config.load_csv.display().to_string())
                .map_err(ConfigError::Series)?,
            irradiance
                .daily_mean(&config.irradiance_csv.display().to_string())
                .map_err(ConfigError::Series)?,
        )
    } else {
        (load, irradiance)
    };

    if load.len() != irradiance.len() {
        return Err(ConfigError::SeriesMismatch(format!(
            "load has {} steps, irradiance has {}",
            load.len(),
            irradiance.len()
        ))
        .into());
    }
    if (load.dt_hours - irradiance.dt_hours).abs() > 1e-9 {
        return Err(ConfigError::SeriesMismatch(format!(
            "load dt {} h vs irradiance dt {} h",
            load.dt_hours, irradiance.dt_hours
        ))
        .into());
    }
    if load.timestamps[0] != irradiance.timestamps[0] {
        return Err(ConfigError::SeriesMismatch(
            "series start at different timestamps".into(),
        )
        .into());
    }

    let mut pv_kw = Vec::with_capacity(irradiance.len());
    for &irr in &irradiance.values {
        pv_kw.push(pv_output(irr, &config.pv).map_err(ConfigError::Domain)?);
    }

    let bounds = FlowBounds::from_ratings(&config.network, config.pv.capacity_cap_kw, &config.battery);
    Ok(DispatchProblem {
        dt_hours: load.dt_hours,
        load_kw: load.values,
        pv_kw,
        battery: config.battery.clone(),
        network: config.network.clone(),
        cost: config.cost.clone(),
        bounds,
    })
}

fn run_diesel(problem: &DispatchProblem) -> Result<StrategyRun, ScenarioError> {
    let (schedule, breakdown) = diesel_only_dispatch(
        &problem.load_kw,
        problem.dt_hours,
        &problem.network,
        &problem.cost,
    )?;
    let objective_dynamic =
        total_objective(&schedule, &problem.load_kw, &problem.battery, &problem.cost)?.objective;
    Ok(StrategyRun {
        name: "diesel-only".into(),
        report: DispatchReport::direct("diesel-only", breakdown),
        schedule,
        objective_dynamic,
        diagnostics: None,
    })
}

fn run_static(
    problem: &DispatchProblem,
    config: &ScenarioConfig,
) -> Result<StrategyRun, ScenarioError> {
    let outcome = static_hybrid_dispatch(
        problem,
        config.static_eta_c,
        config.static_eta_d,
        &config.solver,
    )?;
    finish_iterative("no-degradation", problem, outcome)
}

fn run_proposed(
    problem: &DispatchProblem,
    config: &ScenarioConfig,
) -> Result<StrategyRun, ScenarioError> {
    let outcome = solve(problem, &config.solver)?;
    finish_iterative("proposed", problem, outcome)
}

fn finish_iterative(
    name: &str,
    problem: &DispatchProblem,
    outcome: SolveOutcome,
) -> Result<StrategyRun, ScenarioError> {
    let objective_dynamic = total_objective(
        &outcome.schedule,
        &problem.load_kw,
        &problem.battery,
        &problem.cost,
    )?
    .objective;
    Ok(StrategyRun {
        name: name.into(),
        report: DispatchReport::from_diagnostics(name, outcome.breakdown, &outcome.diagnostics),
        schedule: outcome.schedule,
        objective_dynamic,
        diagnostics: Some(outcome.diagnostics),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::synth::{synth_profile, SynthKind, SynthParams};

    fn write_synth(dir: &Path, kind: SynthKind) -> (PathBuf, PathBuf) {
        let (load, irr) = synth_profile(kind, &SynthParams::default()).unwrap();
        let load_path = dir.join("load.csv");
        let irr_path = dir.join("irradiance.csv");
        load.write_csv(&load_path, "load_kw").unwrap();
        irr.write_csv(&irr_path, "irradiance_kwh_m2").unwrap();
        (load_path, irr_path)
    }

    fn config_with(dir: &Path, extra: &str) -> ScenarioConfig {
        let path = dir.join("scenario.toml");
        let text = format!(
            "[series]\nload_csv = \"load.csv\"\nirradiance_csv = \"irradiance.csv\"\n{extra}"
        );
        std::fs::write(&path, text).unwrap();
        ScenarioConfig::load(&path).unwrap()
    }

    #[test]
    fn diesel_only_run_emits_expected_schedule() {
        let dir = tempfile::tempdir().unwrap();
        // Constant load 2 kW, zero irradiance.
        let t0 = chrono::Utc
            .with_ymd_and_hms(2019, 6, 1, 0, 30, 0)
            .unwrap();
        use chrono::TimeZone;
        let timestamps: Vec<_> = (0..24)
            .map(|h| t0 + chrono::Duration::hours(h))
            .collect();
        crate::series::TimeSeries::new(timestamps.clone(), vec![2.0; 24], "t")
            .unwrap()
            .write_csv(&dir.path().join("load.csv"), "load_kw")
            .unwrap();
        crate::series::TimeSeries::new(timestamps, vec![0.0; 24], "t")
            .unwrap()
            .write_csv(&dir.path().join("irradiance.csv"), "irradiance_kwh_m2")
            .unwrap();

        let cfg = config_with(dir.path(), "[run]\nmode = \"diesel-only\"\n");
        let outcome = run_scenario(&cfg).unwrap();
        assert_eq!(outcome.runs.len(), 1);
        assert!(outcome.runs[0]
            .schedule
            .p_gl
            .iter()
            .all(|&g| (g - 2.1).abs() < 1e-12));

        let csv =
            std::fs::read_to_string(cfg.out_dir.join("schedule_diesel_only.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,p_gl_kw,p_pvl_kw,p_pves_kw,p_esl_kw,soc_kwh"
        );
        assert_eq!(csv.lines().count(), 25);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,2.1,"));
    }

    #[test]
    fn all_mode_produces_positive_savings_and_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        write_synth(dir.path(), SynthKind::SummerDay);
        let cfg = config_with(dir.path(), "[run]\nmode = \"all\"\nemit_plot_data = true\n");
        let outcome = run_scenario(&cfg).unwrap();
        assert!(outcome.all_converged, "strategies should converge");
        let savings = outcome.savings.as_ref().unwrap();
        assert!(savings.pct_vs_diesel.unwrap() > 0.0);
        assert!(savings.pct_vs_static.unwrap() > 0.0);

        for name in [
            "schedule_proposed.csv",
            "schedule_no_degradation.csv",
            "schedule_diesel_only.csv",
            "costs_proposed.json",
            "savings.json",
            "convergence_proposed.log",
            "flows_proposed.csv",
            "strategy_costs.csv",
        ] {
            assert!(cfg.out_dir.join(name).exists(), "{name} missing");
        }
        let costs = std::fs::read_to_string(cfg.out_dir.join("strategy_costs.csv")).unwrap();
        assert_eq!(costs.lines().count(), 4); // header + three strategies
    }

    #[test]
    fn missing_load_file_fails_before_writing_anything() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config_with(dir.path(), "[run]\nmode = \"proposed\"\n");
        let err = run_scenario(&cfg).unwrap_err();
        assert!(matches!(
            err,
            ScenarioError::Config(ConfigError::Series(_))
        ));
        assert!(!cfg.out_dir.exists(), "no partial outputs expected");
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        write_synth(dir.path(), SynthKind::WinterDay);
        let cfg = config_with(dir.path(), "[run]\nmode = \"all\"\nemit_plot_data = true\n");
        run_scenario(&cfg).unwrap();
        let read_all = || {
            let mut contents = Vec::new();
            let mut names: Vec<_> = std::fs::read_dir(&cfg.out_dir)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            names.sort();
            for path in names {
                contents.push(std::fs::read(path).unwrap());
            }
            contents
        };
        let first = read_all();
        run_scenario(&cfg).unwrap();
        assert_eq!(first, read_all());
    }
}
