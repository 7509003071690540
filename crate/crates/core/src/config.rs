//! Scenario configuration: a single TOML file whose keys mirror the model
//! constants, with the reference parameterization as defaults so a bare
//! config runs out of the box.
//!
//! ```toml
//! [series]
//! load_csv = "load.csv"
//! irradiance_csv = "irradiance.csv"
//! daily_mean = false
//!
//! [pv]        # area_m2, efficiency, capacity_cap_kw
//! [battery]   # u, v, p_max, alpha, v0, r_internal, q0, dod, soc_max
//! [network]   # loss_factor, gen_max_kw, h_max_kw, soc_initial_kwh
//! [cost]      # a, b, g1..g4, w1..w3
//! [solver]    # rho, tol_primal, tol_dual, max_iters, ...
//! [run]       # mode, out_dir, emit_plot_data, static_eta_c, static_eta_d
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::battery::BatteryParams;
use crate::error::ConfigError;
use crate::microgrid::{soc_limits, NetworkParams, PvParams};
use crate::objective::CostParams;
use crate::admm::SolverOptions;

/// Which strategies a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Proposed,
    NoDegradation,
    DieselOnly,
    All,
}

impl std::str::FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(Self::Proposed),
            "no-degradation" => Ok(Self::NoDegradation),
            "diesel-only" => Ok(Self::DieselOnly),
            "all" => Ok(Self::All),
            other => Err(format!(
                "unknown mode `{other}` (expected proposed, no-degradation, diesel-only, or all)"
            )),
        }
    }
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::Proposed => "proposed",
            Self::NoDegradation => "no-degradation",
            Self::DieselOnly => "diesel-only",
            Self::All => "all",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesSection {
    load_csv: PathBuf,
    irradiance_csv: PathBuf,
    #[serde(default)]
    daily_mean: bool,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct BatterySection {
    u: Option<f64>,
    v: Option<f64>,
    p_max: Option<f64>,
    alpha: Option<f64>,
    v0: Option<f64>,
    r_internal: Option<f64>,
    q0: Option<f64>,
    dod: Option<f64>,
    soc_max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct PvSection {
    area_m2: Option<f64>,
    efficiency: Option<f64>,
    capacity_cap_kw: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct NetworkSection {
    loss_factor: Option<f64>,
    gen_min_kw: Option<f64>,
    gen_max_kw: Option<f64>,
    h_max_kw: Option<f64>,
    soc_initial_kwh: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct CostSection {
    a: Option<f64>,
    b: Option<f64>,
    g1: Option<f64>,
    g2: Option<f64>,
    g3: Option<f64>,
    g4: Option<f64>,
    w1: Option<f64>,
    w2: Option<f64>,
    w3: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct SolverSection {
    rho: Option<f64>,
    tol_primal: Option<f64>,
    tol_dual: Option<f64>,
    max_iters: Option<usize>,
    newton_tol: Option<f64>,
    newton_max_iters: Option<usize>,
    projection_interval: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RunSection {
    mode: Option<RunMode>,
    out_dir: Option<PathBuf>,
    emit_plot_data: Option<bool>,
    static_eta_c: Option<f64>,
    static_eta_d: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    series: SeriesSection,
    #[serde(default)]
    battery: BatterySection,
    #[serde(default)]
    pv: PvSection,
    #[serde(default)]
    network: NetworkSection,
    #[serde(default)]
    cost: CostSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    run: RunSection,
}

/// A fully resolved scenario configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub load_csv: PathBuf,
    pub irradiance_csv: PathBuf,
    pub daily_mean: bool,
    pub battery: BatteryParams,
    pub pv: PvParams,
    pub network: NetworkParams,
    pub cost: CostParams,
    pub solver: SolverOptions,
    pub mode: RunMode,
    pub out_dir: PathBuf,
    pub emit_plot_data: bool,
    pub static_eta_c: f64,
    pub static_eta_d: f64,
}

impl ScenarioConfig {
    /// Loads and resolves a config file; relative series paths resolve
    /// against the config's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let raw: RawConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::resolve(raw, base)
    }

    fn resolve(raw: RawConfig, base: &Path) -> Result<Self, ConfigError> {
        let defaults = BatteryParams::default();
        let battery = BatteryParams {
            u: raw.battery.u.unwrap_or(defaults.u),
            v: raw.battery.v.unwrap_or(defaults.v),
            p_max: raw.battery.p_max.unwrap_or(defaults.p_max),
            alpha: raw.battery.alpha.unwrap_or(defaults.alpha),
            v0: raw.battery.v0.unwrap_or(defaults.v0),
            r_internal: raw.battery.r_internal.unwrap_or(defaults.r_internal),
            q0: raw.battery.q0.unwrap_or(defaults.q0),
            dod: raw.battery.dod.unwrap_or(defaults.dod),
            soc_max: raw.battery.soc_max.unwrap_or(defaults.soc_max),
        };
        battery.validate()?;

        let pv_defaults = PvParams::default();
        let pv = PvParams {
            area_m2: raw.pv.area_m2.unwrap_or(pv_defaults.area_m2),
            efficiency: raw.pv.efficiency.unwrap_or(pv_defaults.efficiency),
            capacity_cap_kw: raw.pv.capacity_cap_kw.unwrap_or(pv_defaults.capacity_cap_kw),
        };
        pv.validate()?;

        let net_defaults = NetworkParams::default();
        let (soc_min, soc_max) = soc_limits(battery.soc_max, battery.dod)?;
        let network = NetworkParams {
            loss_factor: raw.network.loss_factor.unwrap_or(net_defaults.loss_factor),
            gen_min_kw: raw.network.gen_min_kw.unwrap_or(net_defaults.gen_min_kw),
            gen_max_kw: raw.network.gen_max_kw.unwrap_or(net_defaults.gen_max_kw),
            h_max_kw: raw.network.h_max_kw.unwrap_or(net_defaults.h_max_kw),
            soc_min_kwh: soc_min,
            soc_max_kwh: soc_max,
            soc_initial_kwh: raw
                .network
                .soc_initial_kwh
                .unwrap_or(net_defaults.soc_initial_kwh),
        };
        network.validate()?;

        let cost_defaults = CostParams::default();
        let cost = CostParams {
            a: raw.cost.a.unwrap_or(cost_defaults.a),
            b: raw.cost.b.unwrap_or(cost_defaults.b),
            g1: raw.cost.g1.unwrap_or(cost_defaults.g1),
            g2: raw.cost.g2.unwrap_or(cost_defaults.g2),
            g3: raw.cost.g3.unwrap_or(cost_defaults.g3),
            g4: raw.cost.g4.unwrap_or(cost_defaults.g4),
            w1: raw.cost.w1.unwrap_or(cost_defaults.w1),
            w2: raw.cost.w2.unwrap_or(cost_defaults.w2),
            w3: raw.cost.w3.unwrap_or(cost_defaults.w3),
        };
        cost.validate()?;

        let solver_defaults = SolverOptions::default();
        let solver = SolverOptions {
            rho: raw.solver.rho.unwrap_or(solver_defaults.rho),
            tol_primal: raw.solver.tol_primal.unwrap_or(solver_defaults.tol_primal),
            tol_dual: raw.solver.tol_dual.unwrap_or(solver_defaults.tol_dual),
            max_iters: raw.solver.max_iters.unwrap_or(solver_defaults.max_iters),
            newton_tol: raw.solver.newton_tol.unwrap_or(solver_defaults.newton_tol),
            newton_max_iters: raw
                .solver
                .newton_max_iters
                .unwrap_or(solver_defaults.newton_max_iters),
            projection_interval: raw
                .solver
                .projection_interval
                .unwrap_or(solver_defaults.projection_interval),
            track_lagrangian: false,
        };

        let static_eta_c = raw.run.static_eta_c.unwrap_or(1.0);
        let static_eta_d = raw.run.static_eta_d.unwrap_or(1.0);
        for (name, value) in [("static_eta_c", static_eta_c), ("static_eta_d", static_eta_d)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(ConfigError::Invalid(format!(
                    "{name} = {value} must lie in (0, 1]"
                )));
            }
        }

        Ok(Self {
            load_csv: base.join(&raw.series.load_csv),
            irradiance_csv: base.join(&raw.series.irradiance_csv),
            daily_mean: raw.series.daily_mean,
            battery,
            pv,
            network,
            cost,
            solver,
            mode: raw.run.mode.unwrap_or(RunMode::All),
            out_dir: base.join(raw.run.out_dir.unwrap_or_else(|| PathBuf::from("out"))),
            emit_plot_data: raw.run.emit_plot_data.unwrap_or(false),
            static_eta_c,
            static_eta_d,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_config_resolves_to_reference_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.toml");
        std::fs::write(
            &path,
            "[series]\nload_csv = \"load.csv\"\nirradiance_csv = \"irr.csv\"\n",
        )
        .unwrap();
        let cfg = ScenarioConfig::load(&path).unwrap();
        assert_eq!(cfg.battery.u, 0.035);
        assert_eq!(cfg.battery.v, 0.0052);
        assert_eq!(cfg.battery.p_max, 12.0);
        assert_eq!(cfg.network.loss_factor, 1.05);
        assert_eq!(cfg.network.gen_max_kw, 5.0);
        assert_eq!(cfg.network.soc_min_kwh, 27.5);
        assert_eq!(cfg.cost.w2, 10.0);
        assert_eq!(cfg.pv.capacity_cap_kw, 4.5);
        assert_eq!(cfg.mode, RunMode::All);
        assert_eq!(cfg.load_csv, dir.path().join("load.csv"));
    }

    #[test]
    fn overrides_and_derived_soc_floor() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.toml");
        std::fs::write(
            &path,
            r#"
[series]
load_csv = "l.csv"
irradiance_csv = "i.csv"

[battery]
dod = 0.8
soc_max = 40.0
alpha = 1e-7

[network]
soc_initial_kwh = 20.0

[run]
mode = "diesel-only"
"#,
        )
        .unwrap();
        let cfg = ScenarioConfig::load(&path).unwrap();
        assert!((cfg.network.soc_min_kwh - 8.0).abs() < 1e-12);
        assert_eq!(cfg.mode, RunMode::DieselOnly);
        assert_eq!(cfg.battery.alpha, 1e-7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.toml");
        std::fs::write(
            &path,
            "[series]\nload_csv = \"l\"\nirradiance_csv = \"i\"\n[battery]\nbogus = 1\n",
        )
        .unwrap();
        assert!(matches!(
            ScenarioConfig::load(&path),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.toml");
        std::fs::write(
            &path,
            "[series]\nload_csv = \"l\"\nirradiance_csv = \"i\"\n[battery]\ndod = 1.4\n",
        )
        .unwrap();
        assert!(ScenarioConfig::load(&path).is_err());
    }
}
