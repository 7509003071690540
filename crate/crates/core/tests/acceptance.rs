//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with the measured numbers (visible with `--nocapture`).
//!
//! Run with: `cargo test -p dispatch-core --test acceptance -- --nocapture`

use std::time::Instant;

use dispatch_core::admm::{solve, SolverOptions};
use dispatch_core::baselines::{brute_force_oracle, diesel_only_dispatch, static_hybrid_dispatch};
use dispatch_core::battery::{convexity_audit, BatteryParams};
use dispatch_core::microgrid::{balance_residual, pv_split_residual, NetworkParams, Schedule};
use dispatch_core::objective::{total_objective, CostParams};
use dispatch_core::problem::{DispatchProblem, FlowBounds};
use dispatch_core::synth::{synth_profile, SynthKind, SynthParams};

const FLOW_TOL: f64 = 1e-4;
const SOC_TOL: f64 = 1e-6;
const REGIME_TOL: f64 = 1e-6;

fn instance(load: Vec<f64>, pv: Vec<f64>, alpha: f64, soc0: f64) -> DispatchProblem {
    let battery = BatteryParams {
        alpha,
        ..BatteryParams::default()
    };
    let network = NetworkParams {
        soc_initial_kwh: soc0,
        ..NetworkParams::default()
    };
    let bounds = FlowBounds::from_ratings(&network, 4.5, &battery);
    DispatchProblem {
        dt_hours: 1.0,
        load_kw: load,
        pv_kw: pv,
        battery,
        network,
        cost: CostParams::default(),
        bounds,
    }
}

/// Corpus of short-horizon instances. Loads are multiples of 1/21 kW so
/// the 1.05-scaled balance target lands on the oracle's 0.05 kW grid.
fn oracle_corpus() -> Vec<DispatchProblem> {
    let spike = 119.0 / 21.0; // 5.95 kW after line loss, above the generator
    vec![
        // Single-step instances.
        instance(vec![0.0], vec![0.0], 1e-7, 40.0),
        instance(vec![1.0], vec![0.0], 0.01, 27.5),
        instance(vec![2.0], vec![1.0], 1e-7, 40.0),
        instance(vec![3.0], vec![2.0], 1e-7, 40.0),
        instance(vec![4.0], vec![4.5], 1e-7, 40.0),
        instance(vec![1.0], vec![4.5], 0.01, 54.0),
        instance(vec![spike], vec![0.0], 1e-7, 40.0),
        instance(vec![2.0], vec![3.0], 0.0, 27.5),
        instance(vec![25.0 / 21.0], vec![2.0], 0.01, 53.0),
        instance(vec![4.0], vec![0.0], 1e-7, 55.0),
        // Two-step instances.
        instance(vec![1.0, 2.0], vec![3.0, 0.0], 1e-7, 40.0),
        instance(vec![2.0, spike], vec![4.0, 0.0], 0.01, 30.0),
        instance(vec![0.0, 1.0], vec![4.5, 4.5], 1e-7, 50.0),
        instance(vec![3.0, 3.0], vec![2.0, 2.0], 1e-7, 27.5),
        instance(vec![1.0, 1.0], vec![4.5, 0.0], 0.01, 54.0),
        instance(vec![4.0, 4.0], vec![1.0, 1.0], 1e-7, 40.0),
        instance(vec![spike, 2.0], vec![0.0, 4.0], 1e-7, 35.0),
        instance(vec![2.0, 2.0], vec![0.0, 0.0], 0.0, 40.0),
        instance(vec![25.0 / 21.0, 50.0 / 21.0], vec![2.0, 3.0], 1e-7, 45.0),
        instance(vec![0.0, 0.0], vec![3.0, 3.0], 1e-7, 40.0),
        instance(vec![3.0, 1.0], vec![0.0, 4.5], 0.01, 28.0),
        instance(vec![2.0, 4.0], vec![4.5, 2.0], 1e-7, 52.0),
    ]
}

fn schedule_violations(problem: &DispatchProblem, schedule: &Schedule) -> Vec<String> {
    let mut violations = Vec::new();
    for t in 0..problem.horizon() {
        let bal = balance_residual(
            schedule.p_gl[t],
            schedule.p_pvl[t],
            schedule.p_esl[t],
            problem.load_kw[t],
            &problem.network,
        );
        if bal.abs() > FLOW_TOL {
            violations.push(format!("balance {bal:.3e} at step {t}"));
        }
        let pv = pv_split_residual(schedule.p_pvl[t], schedule.p_pves[t], problem.pv_kw[t]);
        if pv > FLOW_TOL {
            violations.push(format!("pv split {pv:.3e} at step {t}"));
        }
        if schedule.p_pves[t].min(schedule.p_esl[t]) > REGIME_TOL {
            violations.push(format!("simultaneous charge/discharge at step {t}"));
        }
    }
    for (t, &soc) in schedule.soc.iter().enumerate() {
        if soc < problem.network.soc_min_kwh - SOC_TOL
            || soc > problem.network.soc_max_kwh + SOC_TOL
        {
            violations.push(format!("soc {soc:.6} out of bounds at index {t}"));
        }
    }
    violations
}

/// Convexity audit: inside the Ragone validity regime, the discharge cost
/// curves upward and the charging cost downward within 1e-6, in under a
/// second.
#[test]
fn criterion_convexity_audit() {
    let start = Instant::now();
    let params = BatteryParams {
        alpha: 8e-8, // alpha * p_max = 9.6e-7, inside the validity regime
        ..BatteryParams::default()
    };
    let audit = convexity_audit(&params, 1000, 0.95).unwrap();
    let elapsed = start.elapsed();

    let pass = audit.discharge_second_diff_min >= -1e-6
        && audit.charge_second_diff_max <= 1e-6
        && audit.ragone_regime_valid
        && elapsed.as_secs_f64() < 1.0;
    println!(
        "{}: convexity-audit — discharge d2 min {:.3e} >= -1e-6, charge d2 max {:.3e} <= 1e-6, \
         ragone {:.3e} valid={}, {:.3} s",
        if pass { "PASS" } else { "FAIL" },
        audit.discharge_second_diff_min,
        audit.charge_second_diff_max,
        audit.ragone_at_p_max,
        audit.ragone_regime_valid,
        elapsed.as_secs_f64()
    );
    assert!(pass, "{audit:?}");
}

/// Oracle equivalence: on the short-horizon corpus, the solver objective
/// never exceeds the brute-force grid optimum by more than 1% relative.
#[test]
fn criterion_oracle_equivalence() {
    let start = Instant::now();
    let corpus = oracle_corpus();
    assert!(corpus.len() >= 20);
    let opts = SolverOptions::default();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_idx = 0;
    for (idx, problem) in corpus.iter().enumerate() {
        let outcome = solve(problem, &opts)
            .unwrap_or_else(|e| panic!("instance {idx} failed to solve: {e}"));
        let (_, oracle_obj) = brute_force_oracle(problem, 0.05)
            .unwrap_or_else(|e| panic!("instance {idx} oracle failed: {e}"));
        let allowance = 0.01 * oracle_obj.abs().max(1e-9);
        let excess = outcome.breakdown.objective - oracle_obj - allowance;
        if excess > worst_excess {
            worst_excess = excess;
            worst_idx = idx;
        }
        assert!(
            excess <= 0.0,
            "instance {idx}: solver {:.6} vs oracle {:.6} (allowance {allowance:.2e})",
            outcome.breakdown.objective,
            oracle_obj
        );
    }
    let elapsed = start.elapsed();
    let pass = elapsed.as_secs_f64() < 60.0;
    println!(
        "{}: oracle-equivalence — {} instances, worst margin {:.3e} (instance {}), {:.2} s",
        if pass { "PASS" } else { "FAIL" },
        corpus.len(),
        worst_excess,
        worst_idx,
        elapsed.as_secs_f64()
    );
    assert!(pass, "corpus runtime {:.2} s over budget", elapsed.as_secs_f64());
}

/// Model collapse: with alpha = 0, u = v = 0, and flat efficiencies, the
/// proposed solver and the static baseline agree per flow per step.
#[test]
fn criterion_model_collapse() {
    let flat = BatteryParams {
        alpha: 0.0,
        u: 0.0,
        v: 0.0,
        p_max: 1e6,
        ..BatteryParams::default()
    };
    let opts = SolverOptions {
        tol_primal: 1e-6,
        tol_dual: 1e-6,
        ..SolverOptions::default()
    };
    let spike = 119.0 / 21.0;
    let cases: Vec<(Vec<f64>, Vec<f64>, f64)> = vec![
        (vec![1.0], vec![0.0], 27.5),
        (vec![2.0], vec![1.0], 40.0),
        (vec![4.0], vec![4.5], 54.0),
        (vec![1.0, 2.0], vec![3.0, 0.0], 40.0),
        (vec![2.0, spike], vec![4.0, 0.0], 30.0),
        (vec![0.0, 1.0], vec![4.5, 4.5], 50.0),
        (vec![3.0, 3.0], vec![2.0, 2.0], 27.5),
        (vec![2.0, 4.0], vec![4.5, 2.0], 52.0),
    ];
    let mut worst = 0.0f64;
    for (load, pv, soc0) in cases {
        let network = NetworkParams {
            soc_initial_kwh: soc0,
            ..NetworkParams::default()
        };
        let problem = DispatchProblem {
            dt_hours: 1.0,
            load_kw: load,
            pv_kw: pv,
            battery: flat.clone(),
            network,
            cost: CostParams::default(),
            bounds: FlowBounds {
                gen_kw: 5.0,
                pvl_kw: 4.5,
                pves_kw: 4.5,
                esl_kw: 11.988,
            },
        };
        let dynamic = solve(&problem, &opts).unwrap();
        let fixed = static_hybrid_dispatch(&problem, 1.0, 1.0, &opts).unwrap();
        for t in 0..problem.horizon() {
            for (a, b) in [
                (dynamic.schedule.p_gl[t], fixed.schedule.p_gl[t]),
                (dynamic.schedule.p_pvl[t], fixed.schedule.p_pvl[t]),
                (dynamic.schedule.p_pves[t], fixed.schedule.p_pves[t]),
                (dynamic.schedule.p_esl[t], fixed.schedule.p_esl[t]),
            ] {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let pass = worst <= 1e-4;
    println!(
        "{}: model-collapse — max per-flow gap {:.3e} <= 1e-4",
        if pass { "PASS" } else { "FAIL" },
        worst
    );
    assert!(pass);
}

/// Feasibility at convergence: every returned corpus schedule satisfies the
/// balance, PV split, SOC, and regime constraints at the stated tolerances.
#[test]
fn criterion_feasibility_at_convergence() {
    let opts = SolverOptions::default();
    let mut all = Vec::new();
    for (idx, problem) in oracle_corpus().iter().enumerate() {
        let outcome = solve(problem, &opts).unwrap();
        let violations = schedule_violations(problem, &outcome.schedule);
        if !violations.is_empty() {
            all.push(format!("instance {idx}: {}", violations.join("; ")));
        }
    }
    let pass = all.is_empty();
    println!(
        "{}: feasibility-at-convergence — {} corpus schedules, {} violations",
        if pass { "PASS" } else { "FAIL" },
        oracle_corpus().len(),
        all.len()
    );
    assert!(pass, "{all:?}");
}

fn day_problem(kind: SynthKind) -> DispatchProblem {
    let (load, irradiance) = synth_profile(kind, &SynthParams::default()).unwrap();
    let pv_params = dispatch_core::microgrid::PvParams::default();
    let pv_kw: Vec<f64> = irradiance
        .values
        .iter()
        .map(|&irr| dispatch_core::microgrid::pv_output(irr, &pv_params).unwrap())
        .collect();
    let battery = BatteryParams::default();
    let network = NetworkParams::default();
    let bounds = FlowBounds::from_ratings(&network, pv_params.capacity_cap_kw, &battery);
    DispatchProblem {
        dt_hours: load.dt_hours,
        load_kw: load.values,
        pv_kw,
        battery,
        network,
        cost: CostParams::default(),
        bounds,
    }
}

/// Dominance: on the synthetic summer and winter days, the proposed solution
/// costs no more than either baseline schedule under the rate-dependent
/// objective, and both savings percentages are strictly positive.
#[test]
fn criterion_dominance_on_synthetic_days() {
    for kind in [SynthKind::SummerDay, SynthKind::WinterDay] {
        let start = Instant::now();
        let problem = day_problem(kind);
        let opts = SolverOptions::default();

        let proposed = solve(&problem, &opts).unwrap();
        let fixed = static_hybrid_dispatch(&problem, 1.0, 1.0, &opts).unwrap();
        let (diesel_schedule, _) = diesel_only_dispatch(
            &problem.load_kw,
            problem.dt_hours,
            &problem.network,
            &problem.cost,
        )
        .unwrap();

        let eval = |s: &Schedule| {
            total_objective(s, &problem.load_kw, &problem.battery, &problem.cost)
                .unwrap()
                .objective
        };
        let cost_proposed = eval(&proposed.schedule);
        let cost_static = eval(&fixed.schedule);
        let cost_diesel = eval(&diesel_schedule);
        let elapsed = start.elapsed();

        let feasible = schedule_violations(&problem, &proposed.schedule);
        let dominance = cost_proposed <= cost_diesel + 1e-9 && cost_proposed <= cost_static + 1e-9;
        let savings_diesel = 100.0 * (cost_diesel - cost_proposed) / cost_diesel;
        let savings_static = 100.0 * (cost_static - cost_proposed) / cost_static;
        let positive =
            cost_diesel > 0.0 && cost_static > 0.0 && savings_diesel > 0.0 && savings_static > 0.0;
        let in_time = elapsed.as_secs_f64() < 30.0;
        let pass = dominance && positive && in_time && feasible.is_empty();
        println!(
            "{}: dominance-{kind} — proposed {:.4}, static(dyn) {:.4}, diesel {:.4}, \
             savings {:.2}% / {:.2}%, {:.2} s",
            if pass { "PASS" } else { "FAIL" },
            cost_proposed,
            cost_static,
            cost_diesel,
            savings_diesel,
            savings_static,
            elapsed.as_secs_f64()
        );
        assert!(
            pass,
            "kind {kind}: dominance {dominance}, positive {positive}, in_time {in_time}, \
             violations {feasible:?}"
        );
    }
}

/// Qualitative seasonality on the annual scenario, read back from the
/// emitted flow CSV: generator output peaks in winter, PV-to-load in summer.
#[test]
fn criterion_qualitative_seasonality() {
    use dispatch_core::config::{RunMode, ScenarioConfig};

    let dir = tempfile::tempdir().unwrap();
    let (load, irradiance) = synth_profile(SynthKind::Annual, &SynthParams::default()).unwrap();
    load.write_csv(&dir.path().join("load.csv"), "load_kw").unwrap();
    irradiance
        .write_csv(&dir.path().join("irradiance.csv"), "irradiance_kwh_m2")
        .unwrap();
    let config_path = dir.path().join("scenario.toml");
    std::fs::write(
        &config_path,
        "[series]\nload_csv = \"load.csv\"\nirradiance_csv = \"irradiance.csv\"\n\
         [run]\nmode = \"proposed\"\nemit_plot_data = true\n",
    )
    .unwrap();
    let mut config = ScenarioConfig::load(&config_path).unwrap();
    config.mode = RunMode::Proposed;
    let outcome = dispatch_core::run_scenario(&config).unwrap();
    assert!(outcome.all_converged);

    let csv = std::fs::read_to_string(config.out_dir.join("flows_proposed.csv")).unwrap();
    let months = load.months();
    let mut gl_winter = (0.0, 0usize);
    let mut gl_summer = (0.0, 0usize);
    let mut pvl_winter = (0.0, 0usize);
    let mut pvl_summer = (0.0, 0usize);
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let t: usize = fields[0].parse().unwrap();
        let p_gl: f64 = fields[1].parse().unwrap();
        let p_pvl: f64 = fields[2].parse().unwrap();
        match months[t] {
            12 | 1 | 2 => {
                gl_winter = (gl_winter.0 + p_gl, gl_winter.1 + 1);
                pvl_winter = (pvl_winter.0 + p_pvl, pvl_winter.1 + 1);
            }
            6..=8 => {
                gl_summer = (gl_summer.0 + p_gl, gl_summer.1 + 1);
                pvl_summer = (pvl_summer.0 + p_pvl, pvl_summer.1 + 1);
            }
            _ => {}
        }
    }
    let mean = |(sum, n): (f64, usize)| sum / n as f64;
    let pass = mean(gl_winter) > mean(gl_summer) && mean(pvl_summer) > mean(pvl_winter);
    println!(
        "{}: qualitative-seasonality — p_gl winter {:.3} > summer {:.3}; \
         p_pvl summer {:.3} > winter {:.3}",
        if pass { "PASS" } else { "FAIL" },
        mean(gl_winter),
        mean(gl_summer),
        mean(pvl_summer),
        mean(pvl_winter)
    );
    assert!(pass);
}

/// Monotone Lagrangian: across full solves of both synthetic days, no block
/// update ever raises the augmented Lagrangian beyond round-off.
#[test]
fn criterion_monotone_lagrangian() {
    let opts = SolverOptions {
        track_lagrangian: true,
        ..SolverOptions::default()
    };
    let mut worst = f64::NEG_INFINITY;
    for kind in [SynthKind::SummerDay, SynthKind::WinterDay] {
        let problem = day_problem(kind);
        let outcome = solve(&problem, &opts).unwrap();
        worst = worst.max(outcome.diagnostics.max_lagrangian_increase.unwrap());
    }
    let pass = worst <= 1e-9;
    println!(
        "{}: monotone-lagrangian — max block-update increase {:.3e} <= 1e-9",
        if pass { "PASS" } else { "FAIL" },
        worst
    );
    assert!(pass);
}
