//! Dispatch problem definition, validation, and the efficiency model shared
//! by the proposed solver and the static-efficiency baseline.

use serde::{Deserialize, Serialize};

use crate::battery::{self, BatteryParams};
use crate::error::{DomainError, SolveError};
use crate::microgrid::{NetworkParams, Schedule};
use crate::objective::CostParams;

/// Fraction of `p_max` used as the hard ceiling of the discharge box; the
/// pack draw diverges at `p_max` itself.
pub const DISCHARGE_BOX_FRACTION: f64 = 0.999;

/// Per-family upper bounds on the flow variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowBounds {
    pub gen_kw: f64,
    pub pvl_kw: f64,
    pub pves_kw: f64,
    pub esl_kw: f64,
}

impl FlowBounds {
    /// Bounds derived from the component ratings: generator limit, PV
    /// capacity for the two PV-fed flows, and the safe discharge ceiling.
    pub fn from_ratings(net: &NetworkParams, pv_capacity_kw: f64, battery: &BatteryParams) -> Self {
        Self {
            gen_kw: net.gen_max_kw,
            pvl_kw: pv_capacity_kw,
            pves_kw: pv_capacity_kw,
            esl_kw: DISCHARGE_BOX_FRACTION * battery.p_max,
        }
    }
}

/// A complete dispatch instance: horizon, series, parameters, and bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchProblem {
    /// Hours per step.
    pub dt_hours: f64,
    /// Load demand, kW, one entry per step.
    pub load_kw: Vec<f64>,
    /// Available PV output, kW, one entry per step.
    pub pv_kw: Vec<f64>,
    pub battery: BatteryParams,
    pub network: NetworkParams,
    pub cost: CostParams,
    pub bounds: FlowBounds,
}

impl DispatchProblem {
    pub fn horizon(&self) -> usize {
        self.load_kw.len()
    }

    /// Validates lengths, parameter invariants, and nonnegativity of the
    /// series.
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.load_kw.is_empty() {
            return Err(SolveError::EmptyHorizon);
        }
        if self.load_kw.len() != self.pv_kw.len() {
            return Err(SolveError::LengthMismatch {
                load: self.load_kw.len(),
                pv: self.pv_kw.len(),
            });
        }
        self.battery.validate()?;
        self.network.validate()?;
        self.cost.validate()?;
        if self.dt_hours <= 0.0 || !self.dt_hours.is_finite() {
            return Err(DomainError::BadParameter {
                name: "dt_hours",
                value: self.dt_hours,
                constraint: "must be > 0",
            }
            .into());
        }
        for &x in self.load_kw.iter().chain(&self.pv_kw) {
            if x < 0.0 || !x.is_finite() {
                return Err(DomainError::NegativePower(x).into());
            }
        }
        for (name, value) in [
            ("bounds.gen_kw", self.bounds.gen_kw),
            ("bounds.pvl_kw", self.bounds.pvl_kw),
            ("bounds.pves_kw", self.bounds.pves_kw),
            ("bounds.esl_kw", self.bounds.esl_kw),
        ] {
            if value <= 0.0 || !value.is_finite() {
                return Err(DomainError::BadParameter {
                    name,
                    value,
                    constraint: "must be > 0",
                }
                .into());
            }
        }
        Ok(())
    }

    /// Upper bound of the discharge box, kept strictly below the rated
    /// maximum where the pack draw diverges.
    pub fn esl_cap(&self) -> f64 {
        self.bounds
            .esl_kw
            .min(DISCHARGE_BOX_FRACTION * self.battery.p_max)
    }

    /// Up-front power-capacity check: at every step the lossy load must fit
    /// under the generator, the PV available, and the deliverable battery
    /// power combined. Instances that fail are reported, not silently
    /// clipped; this is a necessary condition only (energy limits can still
    /// bind later).
    pub fn feasibility_check(&self) -> Result<(), SolveError> {
        for (t, (&load, &pv)) in self.load_kw.iter().zip(&self.pv_kw).enumerate() {
            let required = self.network.loss_factor * load;
            let available = self.network.gen_max_kw + pv.min(self.bounds.pvl_kw) + self.esl_cap();
            if required > available + 1e-9 {
                return Err(SolveError::Infeasible {
                    step: t,
                    required,
                    available,
                });
            }
        }
        Ok(())
    }

    /// Validates a returned schedule against the model invariants at the
    /// given tolerances. Returns a human-readable list of violations.
    pub fn schedule_violations(
        &self,
        schedule: &Schedule,
        flow_tol: f64,
        soc_tol: f64,
    ) -> Vec<String> {
        let mut violations = Vec::new();
        if schedule.horizon() != self.horizon() {
            violations.push(format!(
                "horizon mismatch: schedule {} vs problem {}",
                schedule.horizon(),
                self.horizon()
            ));
            return violations;
        }
        if schedule.validate_shape().is_err() {
            violations.push("schedule shape invalid".into());
            return violations;
        }
        for t in 0..self.horizon() {
            let bal = crate::microgrid::balance_residual(
                schedule.p_gl[t],
                schedule.p_pvl[t],
                schedule.p_esl[t],
                self.load_kw[t],
                &self.network,
            );
            if bal.abs() > flow_tol {
                violations.push(format!("step {t}: balance residual {bal:.3e}"));
            }
            let pv = crate::microgrid::pv_split_residual(
                schedule.p_pvl[t],
                schedule.p_pves[t],
                self.pv_kw[t],
            );
            if pv > flow_tol {
                violations.push(format!("step {t}: pv split residual {pv:.3e}"));
            }
            if schedule.p_pves[t].min(schedule.p_esl[t]) > self.network.h_max_kw {
                violations.push(format!(
                    "step {t}: simultaneous charge/discharge min {:.3e} above h_max",
                    schedule.p_pves[t].min(schedule.p_esl[t])
                ));
            }
        }
        for (t, &soc) in schedule.soc.iter().enumerate() {
            if soc < self.network.soc_min_kwh - soc_tol || soc > self.network.soc_max_kwh + soc_tol
            {
                violations.push(format!("soc[{t}] = {soc:.6} outside bounds"));
            }
        }
        violations
    }
}

/// Efficiency model behind the storage cost terms: either the rate-dependent
/// curves of the fade model or frozen constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EfficiencyModel {
    /// Rate-dependent efficiencies from the capacity-fade curves.
    Dynamic(BatteryParams),
    /// Frozen constants; collapses the storage terms to linear functions.
    Static {
        eta_c: f64,
        eta_d: f64,
        battery: BatteryParams,
    },
}

impl EfficiencyModel {
    pub fn battery(&self) -> &BatteryParams {
        match self {
            Self::Dynamic(b) => b,
            Self::Static { battery, .. } => battery,
        }
    }

    /// Effective power banked when charging at `p` kW.
    pub fn charge_cost(&self, p: f64) -> f64 {
        match self {
            Self::Dynamic(b) => battery::charge_cost_exact(p, b).unwrap_or(f64::NAN),
            Self::Static { eta_c, .. } => eta_c * p,
        }
    }

    /// Pack draw needed to deliver `p` kW.
    pub fn discharge_cost(&self, p: f64) -> f64 {
        match self {
            Self::Dynamic(b) => battery::discharge_cost(p, b).unwrap_or(f64::NAN),
            Self::Static { eta_d, .. } => p / eta_d,
        }
    }

    pub fn charge_cost_d1(&self, p: f64) -> f64 {
        match self {
            Self::Dynamic(b) => battery::charge_cost_d1(p, b),
            Self::Static { eta_c, .. } => *eta_c,
        }
    }

    pub fn charge_cost_d2(&self, p: f64) -> f64 {
        match self {
            Self::Dynamic(b) => battery::charge_cost_d2(p, b),
            Self::Static { .. } => 0.0,
        }
    }

    pub fn discharge_cost_d1(&self, p: f64) -> f64 {
        match self {
            Self::Dynamic(b) => battery::discharge_cost_d1(p, b),
            Self::Static { eta_d, .. } => 1.0 / eta_d,
        }
    }

    pub fn discharge_cost_d2(&self, p: f64) -> f64 {
        match self {
            Self::Dynamic(b) => battery::discharge_cost_d2(p, b),
            Self::Static { .. } => 0.0,
        }
    }

    /// Slope of the charging cost when it is linear (static model), enabling
    /// a closed-form block update.
    pub fn linear_charge_slope(&self) -> Option<f64> {
        match self {
            Self::Dynamic(_) => None,
            Self::Static { eta_c, .. } => Some(*eta_c),
        }
    }

    /// Slope of the discharge cost when it is linear (static model).
    pub fn linear_discharge_slope(&self) -> Option<f64> {
        match self {
            Self::Dynamic(_) => None,
            Self::Static { eta_d, .. } => Some(1.0 / eta_d),
        }
    }

    /// Largest charge power whose banked energy over `dt` fits in `headroom`
    /// kWh, capped at `box_hi`. Monotone bisection on the charge cost.
    pub fn max_charge_for_headroom(&self, headroom_kwh: f64, dt_hours: f64, box_hi: f64) -> f64 {
        if headroom_kwh <= 0.0 {
            return 0.0;
        }
        let target = headroom_kwh / dt_hours;
        if self.charge_cost(box_hi) <= target {
            return box_hi;
        }
        bisect_increasing(|p| self.charge_cost(p), target, 0.0, box_hi)
    }

    /// Largest discharge power whose pack draw over `dt` fits in `available`
    /// kWh, capped at `box_hi`.
    pub fn max_discharge_for_available(
        &self,
        available_kwh: f64,
        dt_hours: f64,
        box_hi: f64,
    ) -> f64 {
        if available_kwh <= 0.0 {
            return 0.0;
        }
        let target = available_kwh / dt_hours;
        if self.discharge_cost(box_hi) <= target {
            return box_hi;
        }
        bisect_increasing(|p| self.discharge_cost(p), target, 0.0, box_hi)
    }
}

/// Solves `f(x) = target` for increasing `f` on `[lo, hi]` by bisection.
fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-13 {
            return mid;
        }
        if f(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_problem(load: Vec<f64>, pv: Vec<f64>) -> DispatchProblem {
        let battery = BatteryParams {
            alpha: 0.01,
            ..BatteryParams::default()
        };
        let network = NetworkParams::default();
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

    #[test]
    fn validate_catches_length_mismatch() {
        let p = small_problem(vec![1.0, 2.0], vec![0.0]);
        assert!(matches!(
            p.validate(),
            Err(SolveError::LengthMismatch { load: 2, pv: 1 })
        ));
    }

    #[test]
    fn feasibility_check_names_the_step() {
        let p = small_problem(vec![1.0, 20.0], vec![0.0, 0.0]);
        match p.feasibility_check() {
            Err(SolveError::Infeasible { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn feasibility_check_counts_battery_and_pv() {
        // 1.05 * 9 = 9.45 <= 5 (gen) + 4.5 (pv) + 11.988 (battery)
        let p = small_problem(vec![9.0], vec![4.5]);
        assert!(p.feasibility_check().is_ok());
    }

    #[test]
    fn static_model_slopes() {
        let m = EfficiencyModel::Static {
            eta_c: 0.9,
            eta_d: 0.8,
            battery: BatteryParams::default(),
        };
        assert_eq!(m.linear_charge_slope(), Some(0.9));
        assert_eq!(m.linear_discharge_slope(), Some(1.25));
        assert_abs_diff_eq!(m.charge_cost(2.0), 1.8, epsilon = 1e-12);
        assert_abs_diff_eq!(m.discharge_cost(2.0), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn dynamic_model_matches_battery_functions() {
        let b = BatteryParams {
            alpha: 0.01,
            ..BatteryParams::default()
        };
        let m = EfficiencyModel::Dynamic(b.clone());
        assert_abs_diff_eq!(
            m.charge_cost(2.0),
            battery::charge_cost_exact(2.0, &b).unwrap(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            m.discharge_cost(6.0),
            battery::discharge_cost(6.0, &b).unwrap(),
            epsilon = 1e-15
        );
        assert!(m.linear_charge_slope().is_none());
    }

    #[test]
    fn headroom_inversion_hits_the_cap_exactly() {
        let b = BatteryParams {
            alpha: 0.01,
            ..BatteryParams::default()
        };
        let m = EfficiencyModel::Dynamic(b);
        let p = m.max_charge_for_headroom(2.0, 1.0, 4.5);
        assert!(p > 0.0 && p < 4.5);
        assert_abs_diff_eq!(m.charge_cost(p), 2.0, epsilon = 1e-9);
        // Plenty of headroom: the box wins.
        assert_eq!(m.max_charge_for_headroom(100.0, 1.0, 4.5), 4.5);
        assert_eq!(m.max_charge_for_headroom(0.0, 1.0, 4.5), 0.0);
    }

    #[test]
    fn availability_inversion_hits_the_floor_exactly() {
        let b = BatteryParams::default();
        let m = EfficiencyModel::Dynamic(b);
        let p = m.max_discharge_for_available(3.0, 1.0, 11.988);
        assert!(p > 0.0 && p < 11.988);
        assert_abs_diff_eq!(m.discharge_cost(p), 3.0, epsilon = 1e-9);
    }
}
