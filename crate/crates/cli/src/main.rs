//! Command line front end for the microgrid dispatch solver.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use dispatch_core::config::{RunMode, ScenarioConfig};
use dispatch_core::error::{ScenarioError, SolveError};
use dispatch_core::{convexity_audit, run_scenario, synth_profile, SynthKind, SynthParams};

/// Exit status for an infeasible instance.
const EXIT_INFEASIBLE: u8 = 2;
/// Exit status for a run that finished without converging.
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dispatch",
    about = "Degradation-aware economic dispatch for PV-diesel-battery microgrids",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configured scenario and write schedule/cost/savings artifacts.
    Solve(SolveArgs),
    /// Generate synthetic load and irradiance CSVs.
    Synth(SynthArgs),
    /// Audit the storage cost curvatures for the configured battery.
    Audit(AuditArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured mode.
    #[arg(long)]
    mode: Option<RunMode>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the figure-analog plot CSVs.
    #[arg(long)]
    emit_plot_data: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Profile kind: summer-day, winter-day, or annual.
    #[arg(long)]
    kind: SynthKind,
    /// Seed for the jitter.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory for load.csv and irradiance.csv.
    #[arg(long)]
    out: PathBuf,
    /// Peak load, kW.
    #[arg(long, default_value_t = 4.2)]
    peak: f64,
    /// Base load, kW.
    #[arg(long, default_value_t = 1.2)]
    base: f64,
}

#[derive(Args)]
struct AuditArgs {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Grid points for the finite-difference sweep.
    #[arg(long, default_value_t = 1000)]
    grid_points: usize,
    /// Sweep stops at margin * p_max.
    #[arg(long, default_value_t = 0.95)]
    margin: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Audit(args) => cmd_audit(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<ExitCode> {
    let mut config = ScenarioConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    if args.emit_plot_data {
        config.emit_plot_data = true;
    }

    match run_scenario(&config) {
        Ok(outcome) => {
            for run in &outcome.runs {
                println!(
                    "{:>15}: objective {:.6} (converged: {}, iterations: {})",
                    run.name,
                    run.report.breakdown.objective,
                    run.report.converged,
                    run.report.iterations
                );
                for warning in &run.report.warnings {
                    println!("{:>15}  warning: {warning}", "");
                }
            }
            if let Some(savings) = &outcome.savings {
                let fmt = |p: Option<f64>| {
                    p.map_or("undefined".to_string(), |v| format!("{v:.2}%"))
                };
                println!(
                    "savings vs diesel-only: {}, vs no-degradation: {}",
                    fmt(savings.pct_vs_diesel),
                    fmt(savings.pct_vs_static)
                );
            }
            println!("artifacts written to {}", outcome.out_dir.display());
            if outcome.all_converged {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("warning: at least one strategy did not converge");
                Ok(ExitCode::from(EXIT_NOT_CONVERGED))
            }
        }
        Err(ScenarioError::Solve(SolveError::Infeasible {
            step,
            required,
            available,
        })) => {
            eprintln!(
                "infeasible at step {step}: required {required:.4} kW, available {available:.4} kW"
            );
            Ok(ExitCode::from(EXIT_INFEASIBLE))
        }
        Err(other) => Err(other.into()),
    }
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<ExitCode> {
    let params = SynthParams {
        peak_load_kw: args.peak,
        base_load_kw: args.base,
        seed: args.seed,
    };
    let (load, irradiance) = synth_profile(args.kind, &params)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let load_path = args.out.join("load.csv");
    let irr_path = args.out.join("irradiance.csv");
    load.write_csv(&load_path, "load_kw")?;
    irradiance.write_csv(&irr_path, "irradiance_kwh_m2")?;
    println!(
        "wrote {} and {} ({} steps, dt {} h)",
        load_path.display(),
        irr_path.display(),
        load.len(),
        load.dt_hours
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(args: AuditArgs) -> anyhow::Result<ExitCode> {
    let config = ScenarioConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    let audit = convexity_audit(&config.battery, args.grid_points, args.margin)?;
    println!(
        "discharge cost second difference: min {:.6e}, max {:.6e} -> {}",
        audit.discharge_second_diff_min,
        audit.discharge_second_diff_max,
        verdict(audit.discharge_convex, "convex")
    );
    println!(
        "charging cost second difference:  min {:.6e}, max {:.6e} -> {}",
        audit.charge_second_diff_min,
        audit.charge_second_diff_max,
        verdict(audit.charge_concave, "concave")
    );
    println!(
        "Ragone parameter at p_max: {:.3e} -> concavity-validity regime {}",
        audit.ragone_at_p_max,
        if audit.ragone_regime_valid {
            "VALID"
        } else {
            "VIOLATED"
        }
    );
    Ok(ExitCode::SUCCESS)
}

fn verdict(pass: bool, label: &str) -> String {
    if pass {
        format!("{label}: PASS")
    } else {
        format!("{label}: FAIL")
    }
}
