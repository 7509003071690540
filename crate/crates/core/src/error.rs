//! Error types shared across the crate.

use thiserror::Error;

/// Violations of the physical model's domains and parameter invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("power must be nonnegative, got {0} kW")]
    NegativePower(f64),
    #[error("power {power} kW exceeds the rated maximum {max} kW")]
    PowerAboveRated { power: f64, max: f64 },
    #[error("power {power} W exceeds the maximum deliverable {limit} W for this cell")]
    PowerAboveDeliverable { power: f64, limit: f64 },
    #[error("current must be positive, got {0} A")]
    NonPositiveCurrent(f64),
    #[error("cell electrical parameters must be positive (v0 = {v0} V, r = {r} ohm)")]
    BadCellElectrical { v0: f64, r: f64 },
    #[error("negative irradiance {0} kWh/m^2")]
    NegativeIrradiance(f64),
    #[error("depth of discharge {0} outside [0, 1]")]
    BadDepthOfDischarge(f64),
    #[error("invalid parameter {name}: {value} ({constraint})")]
    BadParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
}

/// Errors raised while assembling or solving a dispatch problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("series length mismatch: load has {load} steps, pv has {pv}")]
    LengthMismatch { load: usize, pv: usize },
    #[error("dispatch problem has an empty horizon")]
    EmptyHorizon,
    #[error(
        "instance infeasible at step {step}: required supply {required:.4} kW exceeds \
         available capacity {available:.4} kW"
    )]
    Infeasible {
        step: usize,
        required: f64,
        available: f64,
    },
    #[error("model error: {0}")]
    Domain(#[from] DomainError),
    #[error("brute-force oracle refused: horizon {0} exceeds 3 steps")]
    OracleHorizonTooLarge(usize),
    #[error("oracle grid step must be positive, got {0}")]
    BadGridStep(f64),
    #[error("oracle found no feasible grid point")]
    OracleNoFeasiblePoint,
}

/// Errors in time-series ingestion and validation.
#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    BadHeader {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path}: file contains no data rows")]
    Empty { path: String },
    #[error("{path}: need at least two rows to derive a timestep")]
    TooShort { path: String },
    #[error("{path} row {row}: timestamps must be strictly increasing")]
    NonMonotonicTimestamps { path: String, row: usize },
    #[error("{path} row {row}: spacing {found_hours} h deviates from {expected_hours} h")]
    NonUniformSpacing {
        path: String,
        row: usize,
        expected_hours: f64,
        found_hours: f64,
    },
    #[error("{path} row {row}: negative value {value}")]
    NegativeValue {
        path: String,
        row: usize,
        value: f64,
    },
    #[error("{path} row {row}: cannot parse timestamp `{text}`")]
    BadTimestamp {
        path: String,
        row: usize,
        text: String,
    },
    #[error("{path} row {row}: cannot parse value `{text}`")]
    BadValue {
        path: String,
        row: usize,
        text: String,
    },
}

/// Errors in scenario configuration and orchestration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("config error: {0}")]
    Invalid(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("load and irradiance series are not aligned: {0}")]
    SeriesMismatch(String),
}

/// Errors from an end-to-end scenario run.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("model error: {0}")]
    Domain(#[from] DomainError),
    #[error("solver did not converge within {iterations} iterations (primal {primal:.3e})")]
    NotConverged { iterations: usize, primal: f64 },
    #[error("output error for {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("emitted schedule violates model invariants: {0}")]
    InvalidSchedule(String),
}
