//! Cost components and the weighted dispatch objective.
//!
//! Per step, three components enter the total with fixed weights:
//!
//! ```text
//! J1 = G1 (a p_gl^2 + b p_gl)                   generator fuel cost
//! J2 = G3 eta_c(c) c - G4 eta_d(d)^{-1} d       storage value
//! J3 = G2 p_pvl                                 PV saving
//! objective = sum_t  w1 J1 - w2 J2 - w3 J3
//! ```
//!
//! Note the sign convention: minimizing the objective *rewards* charging and
//! *penalizes* discharging through the `-w2 J2` term, and the default storage
//! weight (w2 = 10) dwarfs the others. This drives solutions that bank every
//! spare PV kilowatt until the SOC ceiling binds; it is the intended behavior
//! of the cost model, not an artifact. Coefficients mix $/h and $/kWh scales;
//! the objective keeps the plain per-step sum, and any dt scaling belongs to
//! reporting, not to the optimization.

use serde::{Deserialize, Serialize};

use crate::battery::{self, BatteryParams};
use crate::error::DomainError;
use crate::microgrid::Schedule;
use crate::problem::EfficiencyModel;

/// Cost coefficients and component weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Quadratic fuel coefficient, $/h per kW^2.
    pub a: f64,
    /// Linear fuel coefficient, $/kWh.
    pub b: f64,
    /// Unit cost of generator energy, $/kW.
    pub g1: f64,
    /// Unit cost of PV energy to load, $/kW.
    pub g2: f64,
    /// Unit cost of energy into storage, $/kW.
    pub g3: f64,
    /// Unit cost of energy out of storage, $/kW.
    pub g4: f64,
    /// Component weights.
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            a: 0.25,
            b: 0.1,
            g1: 1.0,
            g2: 1.0,
            g3: 1.0,
            g4: 1.0,
            w1: 1.0,
            w2: 10.0,
            w3: 0.1,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let fields = [
            ("a", self.a),
            ("b", self.b),
            ("g1", self.g1),
            ("g2", self.g2),
            ("g3", self.g3),
            ("g4", self.g4),
            ("w1", self.w1),
            ("w2", self.w2),
            ("w3", self.w3),
        ];
        for (name, value) in fields {
            if value < 0.0 || !value.is_finite() {
                return Err(DomainError::BadParameter {
                    name,
                    value,
                    constraint: "must be >= 0",
                });
            }
        }
        Ok(())
    }
}

/// Per-component totals of an evaluated schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub j1_total: f64,
    pub j2_total: f64,
    pub j3_total: f64,
    /// `w1 * j1_total - w2 * j2_total - w3 * j3_total`.
    pub objective: f64,
}

/// Generator fuel cost at one step.
pub fn generator_cost(p_gl: f64, c: &CostParams) -> f64 {
    c.g1 * (c.a * p_gl * p_gl + c.b * p_gl)
}

/// PV saving at one step.
pub fn pv_saving(p_pvl: f64, c: &CostParams) -> f64 {
    c.g2 * p_pvl
}

/// Storage value at one step: banked charge power minus the pack draw needed
/// to deliver the discharge power.
pub fn storage_saving(
    p_pves: f64,
    p_esl: f64,
    battery: &BatteryParams,
    c: &CostParams,
) -> Result<f64, DomainError> {
    let banked = battery::charge_cost_exact(p_pves, battery)?;
    let drawn = battery::discharge_cost(p_esl, battery)?;
    Ok(c.g3 * banked - c.g4 * drawn)
}

/// Evaluates the weighted objective over a schedule under the rate-dependent
/// storage model, retaining the per-component totals.
pub fn total_objective(
    schedule: &Schedule,
    load: &[f64],
    battery: &BatteryParams,
    c: &CostParams,
) -> Result<CostBreakdown, DomainError> {
    total_objective_with_model(
        schedule,
        load,
        &EfficiencyModel::Dynamic(battery.clone()),
        c,
    )
}

/// Evaluates the weighted objective under an explicit storage model, so the
/// static-efficiency baseline can be costed consistently with its own solve.
pub fn total_objective_with_model(
    schedule: &Schedule,
    load: &[f64],
    model: &EfficiencyModel,
    c: &CostParams,
) -> Result<CostBreakdown, DomainError> {
    schedule.validate_shape()?;
    if load.len() != schedule.horizon() {
        return Err(DomainError::BadParameter {
            name: "load",
            value: load.len() as f64,
            constraint: "must match the schedule horizon",
        });
    }
    let mut j1 = 0.0;
    let mut j2 = 0.0;
    let mut j3 = 0.0;
    for t in 0..schedule.horizon() {
        j1 += generator_cost(schedule.p_gl[t], c);
        let banked = model.charge_cost(schedule.p_pves[t]);
        let drawn = model.discharge_cost(schedule.p_esl[t]);
        if !banked.is_finite() || !drawn.is_finite() {
            return Err(DomainError::PowerAboveRated {
                power: schedule.p_esl[t].max(schedule.p_pves[t]),
                max: model.battery().p_max,
            });
        }
        j2 += c.g3 * banked - c.g4 * drawn;
        j3 += pv_saving(schedule.p_pvl[t], c);
    }
    Ok(CostBreakdown {
        j1_total: j1,
        j2_total: j2,
        j3_total: j3,
        objective: c.w1 * j1 - c.w2 * j2 - c.w3 * j3,
    })
}
