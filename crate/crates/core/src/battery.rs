//! Battery pack capacity fade, rate-dependent efficiency, and storage cost
//! functions.
//!
//! The pack model is semi-empirical: the capacity available to a charge or
//! discharge halves into two fitted curves of the power flowing through the
//! pack,
//!
//! ```text
//! charge:    Q_c(P) = (1 - u P - v P^2) Q_0
//! discharge: Q_d(P) = tanh((P_max - P) / sqrt(P_max + P)) Q_0
//! ```
//!
//! from which rate-dependent efficiencies follow:
//!
//! ```text
//! eta_c(P) = 1 + (1/2) (1 - sqrt(1 + 2 alpha P)) (1 - u P - v P^2)
//! eta_d(P) = tanh((P_max - P) / sqrt(P_max + P))
//! ```
//!
//! with `alpha = 2R / V0^2` the Ragone constant at pack scale. The storage
//! cost functions built on these are `P eta_c(P)` for charging (concave while
//! the Ragone parameter `alpha P` stays at or below 1e-6) and `P / eta_d(P)`
//! for discharging (convex on `[0, P_max)`). [`convexity_audit`] checks both
//! claims numerically with central finite differences.
//!
//! Cell-level equivalent-circuit relations (currents, stored/available
//! energies, lifetime) take power in watts and use the cell voltage and
//! internal resistance directly; pack-level efficiency and cost functions take
//! power in kW and use only `alpha`, `u`, `v`, and `P_max`.
//!
//! All functions here are pure; values are immutable and thread-safe.

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// Ragone-parameter ceiling under which the charging cost stays concave.
///
/// `alpha * P` at or below this order keeps every neglected term of the
/// charging-cost expansion strictly smaller than the retained quadratic.
pub const RAGONE_VALIDITY_LIMIT: f64 = 1e-6;

/// Tolerance for the finite-difference convexity/concavity audits.
pub const AUDIT_TOLERANCE: f64 = 1e-6;

/// Electrochemical and fade constants of the storage pack.
///
/// `u`, `v`, `p_max`, and `alpha` drive the pack-scale efficiency and cost
/// functions (power in kW). `v0`, `r_internal`, and `q0`-as-Ah serve the
/// cell-level equivalent-circuit relations (power in watts). `q0` doubles as
/// the pack nominal capacity in kWh for pack-scale use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryParams {
    /// Fade coefficient, per kW.
    pub u: f64,
    /// Fade coefficient, per kW^2.
    pub v: f64,
    /// Maximum rated discharge power, kW.
    pub p_max: f64,
    /// Ragone constant `2R/V0^2` at pack scale, per kW.
    pub alpha: f64,
    /// Cell open-circuit/terminal voltage, volts (cell-level operations only).
    pub v0: f64,
    /// Cell internal resistance, ohms (cell-level operations only).
    pub r_internal: f64,
    /// Nominal capacity: kWh at pack scale, Ah for cell-level operations.
    pub q0: f64,
    /// Depth of discharge, fraction in [0, 1].
    pub dod: f64,
    /// Upper state-of-charge bound, kWh.
    pub soc_max: f64,
}

impl Default for BatteryParams {
    /// Shipped defaults: the fade and sizing constants of the reference
    /// parameterization (u = 0.035/kW, v = 0.0052/kW^2, P_max = 12 kW,
    /// 55 kWh pack, 50% DOD) plus a nominal cell (3.2 V, 0.1 ohm).
    ///
    /// `alpha` defaults to 0.01/kW, a visible rate penalty that exceeds the
    /// concavity-validity ceiling; the solver reports the regime violation.
    /// Set `alpha <= 1e-6 / p_max` for a certified-convex configuration.
    fn default() -> Self {
        Self {
            u: 0.035,
            v: 0.0052,
            p_max: 12.0,
            alpha: 0.01,
            v0: 3.2,
            r_internal: 0.1,
            q0: 55.0,
            dod: 0.5,
            soc_max: 55.0,
        }
    }
}

impl BatteryParams {
    /// Checks the structural invariants of the parameter set.
    pub fn validate(&self) -> Result<(), DomainError> {
        let checks: [(&'static str, f64, bool, &'static str); 7] = [
            ("u", self.u, self.u >= 0.0, "must be >= 0"),
            ("v", self.v, self.v >= 0.0, "must be >= 0"),
            ("p_max", self.p_max, self.p_max > 0.0, "must be > 0"),
            ("alpha", self.alpha, self.alpha >= 0.0, "must be >= 0"),
            ("q0", self.q0, self.q0 > 0.0, "must be > 0"),
            ("soc_max", self.soc_max, self.soc_max > 0.0, "must be > 0"),
            (
                "dod",
                self.dod,
                (0.0..=1.0).contains(&self.dod),
                "must lie in [0, 1]",
            ),
        ];
        for (name, value, ok, constraint) in checks {
            if !ok || !value.is_finite() {
                return Err(DomainError::BadParameter {
                    name,
                    value,
                    constraint,
                });
            }
        }
        Ok(())
    }

    /// Maximum deliverable cell power `V0^2 / 4R` in watts.
    pub fn cell_power_limit(&self) -> f64 {
        self.v0 * self.v0 / (4.0 * self.r_internal)
    }

    fn check_cell_electrical(&self) -> Result<(), DomainError> {
        if self.v0 > 0.0 && self.r_internal > 0.0 {
            Ok(())
        } else {
            Err(DomainError::BadCellElectrical {
                v0: self.v0,
                r: self.r_internal,
            })
        }
    }
}

/// Result of the charge-side fade evaluation.
///
/// The fitted quadratic can drop below zero at high power (outside the range
/// the curve was fitted on); the value is reported as-is with a flag so the
/// dispatch layer's box constraints can keep power inside the fitted range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeFade {
    /// `1 - u P - v P^2`, the available fraction of nominal capacity.
    pub fraction: f64,
    /// True when the fade exceeds the nominal capacity (fraction < 0).
    pub beyond_fitted_range: bool,
}

/// Available-capacity fraction while charging at `p` kW.
pub fn capacity_fraction_charge(p: f64, params: &BatteryParams) -> Result<ChargeFade, DomainError> {
    if p < 0.0 {
        return Err(DomainError::NegativePower(p));
    }
    let fraction = 1.0 - params.u * p - params.v * p * p;
    Ok(ChargeFade {
        fraction,
        beyond_fitted_range: fraction < 0.0,
    })
}

/// Available-capacity fraction while discharging at `p` kW.
pub fn capacity_fraction_discharge(p: f64, params: &BatteryParams) -> Result<f64, DomainError> {
    if p < 0.0 {
        return Err(DomainError::NegativePower(p));
    }
    if p > params.p_max {
        return Err(DomainError::PowerAboveRated {
            power: p,
            max: params.p_max,
        });
    }
    Ok(((params.p_max - p) / (params.p_max + p).sqrt()).tanh())
}

/// Charging current through the cell's equivalent circuit at `p` watts.
///
/// The current solves `P = I V0 + I^2 R`; of the two roots only
/// `-V0/2R + sqrt((V0/2R)^2 + P/R)` is nonnegative, so that one is returned.
pub fn charge_current(p: f64, params: &BatteryParams) -> Result<f64, DomainError> {
    if p < 0.0 {
        return Err(DomainError::NegativePower(p));
    }
    params.check_cell_electrical()?;
    let half = params.v0 / (2.0 * params.r_internal);
    Ok(-half + (half * half + p / params.r_internal).sqrt())
}

/// Discharging current through the cell's equivalent circuit at `p` watts.
///
/// Solves `P = I V0 - I^2 R`; valid up to the deliverable limit `V0^2 / 4R`,
/// where the discriminant reaches zero and the current equals `V0/2R`.
pub fn discharge_current(p: f64, params: &BatteryParams) -> Result<f64, DomainError> {
    if p < 0.0 {
        return Err(DomainError::NegativePower(p));
    }
    params.check_cell_electrical()?;
    let limit = params.cell_power_limit();
    if p > limit {
        return Err(DomainError::PowerAboveDeliverable { power: p, limit });
    }
    let half = params.v0 / (2.0 * params.r_internal);
    let disc = (half * half - p / params.r_internal).max(0.0);
    Ok(half - disc.sqrt())
}

/// Time for the cell to pass `capacity_available` at constant `current`.
pub fn cell_lifetime(capacity_available: f64, current: f64) -> Result<f64, DomainError> {
    if current <= 0.0 {
        return Err(DomainError::NonPositiveCurrent(current));
    }
    if capacity_available < 0.0 {
        return Err(DomainError::BadParameter {
            name: "capacity_available",
            value: capacity_available,
            constraint: "must be >= 0",
        });
    }
    Ok(capacity_available / current)
}

/// Total energy stored in the cell when charged to completion at `p` watts.
///
/// `E_c = Q0 V0 + (V0/2R - sqrt((V0/2R)^2 + P/R)) Q_c R`; the correction term
/// vanishes at zero power and grows with rate, so stored energy decreases as
/// the charge rate rises.
pub fn stored_energy_charge(
    p: f64,
    capacity_available: f64,
    params: &BatteryParams,
) -> Result<f64, DomainError> {
    let current = charge_current(p, params)?;
    Ok(params.q0 * params.v0 - current * capacity_available * params.r_internal)
}

/// Energy available to the load when discharging to completion at `p` watts.
///
/// `E_d = 2 R Q_d P / (V0 - sqrt(V0^2 - 4 R P))`, evaluated in the
/// conjugate form `Q_d (V0 + sqrt(V0^2 - 4 R P)) / 2` which is the same
/// function without the cancellation at small powers and carries the
/// analytical limit `Q_d V0` at zero power.
pub fn available_energy_discharge(
    p: f64,
    capacity_available: f64,
    params: &BatteryParams,
) -> Result<f64, DomainError> {
    if p < 0.0 {
        return Err(DomainError::NegativePower(p));
    }
    params.check_cell_electrical()?;
    let limit = params.cell_power_limit();
    if p > limit {
        return Err(DomainError::PowerAboveDeliverable { power: p, limit });
    }
    let disc = (params.v0 * params.v0 - 4.0 * params.r_internal * p).max(0.0);
    Ok(capacity_available * (params.v0 + disc.sqrt()) / 2.0)
}

/// Snapshot of a cell's operating point: current, usable capacity, lifetime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    /// Current through the equivalent circuit, amperes.
    pub current: f64,
    /// Capacity available at this rate, same units as `q0`.
    pub capacity_available: f64,
    /// Time to pass the available capacity at this current, hours.
    pub lifetime: f64,
}

impl CellState {
    /// Cell state while charging at `p` watts (fade curve chained with the
    /// charge current).
    pub fn charging(p: f64, params: &BatteryParams) -> Result<Self, DomainError> {
        // Fade curves are fitted at pack scale in kW; cell power in watts.
        let fade = capacity_fraction_charge(p / 1000.0, params)?;
        let capacity_available = (fade.fraction * params.q0).max(0.0);
        let current = charge_current(p, params)?;
        let lifetime = if current > 0.0 {
            capacity_available / current
        } else {
            f64::INFINITY
        };
        Ok(Self {
            current,
            capacity_available,
            lifetime,
        })
    }

    /// Cell state while discharging at `p` watts.
    ///
    /// The available capacity uses the discharge fade curve (the lifetime of a
    /// discharging pack is governed by what it can still deliver).
    pub fn discharging(p: f64, params: &BatteryParams) -> Result<Self, DomainError> {
        let fraction = capacity_fraction_discharge(p / 1000.0, params)?;
        let capacity_available = fraction * params.q0;
        let current = discharge_current(p, params)?;
        let lifetime = if current > 0.0 {
            capacity_available / current
        } else {
            f64::INFINITY
        };
        Ok(Self {
            current,
            capacity_available,
            lifetime,
        })
    }
}

/// Rate-dependent charging efficiency at `p` kW.
///
/// `eta_c(P) = 1 + (1/2)(1 - sqrt(1 + 2 alpha P))(1 - u P - v P^2)`; equals 1
/// at zero power or zero internal resistance.
pub fn eta_c(p: f64, params: &BatteryParams) -> Result<f64, DomainError> {
    if p < 0.0 {
        return Err(DomainError::NegativePower(p));
    }
    let fade = 1.0 - params.u * p - params.v * p * p;
    Ok(1.0 + 0.5 * (1.0 - (1.0 + 2.0 * params.alpha * p).sqrt()) * fade)
}

/// Rate-dependent discharging efficiency at `p` kW.
///
/// Numerically identical to the discharge fade fraction: for internal
/// resistances below order 1e-2 the exact efficiency collapses onto
/// `tanh((P_max - P)/sqrt(P_max + P))`. Reaches 0 at `p_max`, where the
/// reciprocal discharge cost diverges, so `p_max` itself is out of domain.
pub fn eta_d(p: f64, params: &BatteryParams) -> Result<f64, DomainError> {
    if p < 0.0 {
        return Err(DomainError::NegativePower(p));
    }
    if p >= params.p_max {
        return Err(DomainError::PowerAboveRated {
            power: p,
            max: params.p_max,
        });
    }
    Ok(((params.p_max - p) / (params.p_max + p).sqrt()).tanh())
}

/// Effective power banked when charging at `p` kW: `P eta_c(P)`.
pub fn charge_cost_exact(p: f64, params: &BatteryParams) -> Result<f64, DomainError> {
    Ok(p * eta_c(p, params)?)
}

/// Quadratic form of the charging cost, `P - (alpha/2) P^2`.
///
/// Valid while the Ragone parameter stays inside the
/// [`RAGONE_VALIDITY_LIMIT`] regime, where every dropped expansion term is
/// negligible.
pub fn charge_cost_quadratic(p: f64, params: &BatteryParams) -> Result<f64, DomainError> {
    if p < 0.0 {
        return Err(DomainError::NegativePower(p));
    }
    Ok(p - 0.5 * params.alpha * p * p)
}

/// Power drawn from the pack to deliver `p` kW: `P / eta_d(P)`.
pub fn discharge_cost(p: f64, params: &BatteryParams) -> Result<f64, DomainError> {
    if p == 0.0 {
        return Ok(0.0);
    }
    Ok(p / eta_d(p, params)?)
}

/// Ragone parameter `alpha * P` with its concavity-validity verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RagoneParameter {
    pub value: f64,
    /// True while `alpha * P` stays at or below [`RAGONE_VALIDITY_LIMIT`].
    pub regime_valid: bool,
}

/// Evaluates the Ragone parameter at `p` kW.
pub fn ragone_parameter(p: f64, params: &BatteryParams) -> RagoneParameter {
    let value = params.alpha * p;
    RagoneParameter {
        value,
        regime_valid: value <= RAGONE_VALIDITY_LIMIT,
    }
}

// --- derivatives used by the scalar block solves ---------------------------

/// First derivative of `charge_cost_exact` with respect to power.
pub fn charge_cost_d1(p: f64, params: &BatteryParams) -> f64 {
    let s = (1.0 + 2.0 * params.alpha * p).sqrt();
    let q = 1.0 - params.u * p - params.v * p * p;
    let qp = -params.u - 2.0 * params.v * p;
    // d/dp [ (1-s) q ] = -(alpha/s) q + (1-s) q'
    let inner = (1.0 - s) * q;
    let inner_p = -(params.alpha / s) * q + (1.0 - s) * qp;
    1.0 + 0.5 * (inner + p * inner_p)
}

/// Second derivative of `charge_cost_exact` with respect to power.
pub fn charge_cost_d2(p: f64, params: &BatteryParams) -> f64 {
    let a = params.alpha;
    let s = (1.0 + 2.0 * a * p).sqrt();
    let q = 1.0 - params.u * p - params.v * p * p;
    let qp = -params.u - 2.0 * params.v * p;
    let inner_p = -(a / s) * q + (1.0 - s) * qp;
    let inner_pp = -2.0 * a * qp / s + a * a * q / (s * s * s) - 2.0 * params.v * (1.0 - s);
    0.5 * (2.0 * inner_p + p * inner_pp)
}

fn tanh_argument(p: f64, p_max: f64) -> (f64, f64, f64) {
    // g = (p_max - p) / sqrt(p_max + p) and its first two derivatives.
    let root = (p_max + p).sqrt();
    let g = (p_max - p) / root;
    let g1 = -(3.0 * p_max + p) / (2.0 * root * root * root);
    let g2 = (7.0 * p_max + p) / (4.0 * root * root * root * root * root);
    (g, g1, g2)
}

/// First derivative of `discharge_cost` with respect to power.
pub fn discharge_cost_d1(p: f64, params: &BatteryParams) -> f64 {
    let (g, g1, _) = tanh_argument(p, params.p_max);
    let t = g.tanh();
    let coth = 1.0 / t;
    let csch2 = 1.0 / g.sinh().powi(2);
    coth - p * g1 * csch2
}

/// Second derivative of `discharge_cost` with respect to power.
pub fn discharge_cost_d2(p: f64, params: &BatteryParams) -> f64 {
    let (g, g1, g2) = tanh_argument(p, params.p_max);
    let t = g.tanh();
    let coth = 1.0 / t;
    let csch2 = 1.0 / g.sinh().powi(2);
    -csch2 * (2.0 * g1 + p * g2 - 2.0 * p * g1 * g1 * coth)
}

// --- convexity audit --------------------------------------------------------

/// Numerical audit of the storage cost curvatures.
///
/// Central finite differences of `discharge_cost` and `charge_cost_exact` on
/// a grid over `(0, margin * p_max]`; the discharge cost must curve upward
/// (convex) and the charging cost downward (concave) within
/// [`AUDIT_TOLERANCE`]. Degenerate parameters yield fail entries rather than
/// errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityAudit {
    /// Minimum second difference of the discharge cost over the grid.
    pub discharge_second_diff_min: f64,
    /// Maximum second difference of the discharge cost over the grid.
    pub discharge_second_diff_max: f64,
    /// Minimum second difference of the exact charging cost over the grid.
    pub charge_second_diff_min: f64,
    /// Maximum second difference of the exact charging cost over the grid.
    pub charge_second_diff_max: f64,
    /// Discharge cost convex: min second difference >= -tolerance.
    pub discharge_convex: bool,
    /// Charging cost concave: max second difference <= +tolerance.
    pub charge_concave: bool,
    /// Ragone parameter evaluated at `p_max`.
    pub ragone_at_p_max: f64,
    /// True when `alpha * p_max` stays inside the concavity-validity regime.
    pub ragone_regime_valid: bool,
    /// Finite-difference step used.
    pub step: f64,
    /// Tolerance applied to both verdicts.
    pub tolerance: f64,
}

/// Runs the curvature audit on `grid_points` points up to `margin * p_max`.
///
/// The step is `p_max * 1e-4`, balancing truncation against round-off at
/// 64-bit precision; the grid starts at one step so the left stencil point
/// stays inside the domain, and stops at `margin * p_max` because the
/// discharge cost diverges at `p_max`.
pub fn convexity_audit(
    params: &BatteryParams,
    grid_points: usize,
    margin: f64,
) -> Result<ConvexityAudit, DomainError> {
    if grid_points < 3 {
        return Err(DomainError::BadParameter {
            name: "grid_points",
            value: grid_points as f64,
            constraint: "must be >= 3",
        });
    }
    if !(0.0 < margin && margin < 1.0) {
        return Err(DomainError::BadParameter {
            name: "margin",
            value: margin,
            constraint: "must lie in (0, 1)",
        });
    }

    let h = params.p_max * 1e-4;
    let hi = margin * params.p_max;
    let eval_discharge = |p: f64| discharge_cost(p, params).unwrap_or(f64::NAN);
    let eval_charge = |p: f64| charge_cost_exact(p, params).unwrap_or(f64::NAN);

    let mut dis_min = f64::INFINITY;
    let mut dis_max = f64::NEG_INFINITY;
    let mut chg_min = f64::INFINITY;
    let mut chg_max = f64::NEG_INFINITY;
    let mut saw_nan = false;

    for i in 0..grid_points {
        let x = h + (hi - h) * i as f64 / (grid_points - 1) as f64;
        let d2_dis = second_difference(eval_discharge, x, h);
        let d2_chg = second_difference(eval_charge, x, h);
        if d2_dis.is_nan() || d2_chg.is_nan() {
            saw_nan = true;
            continue;
        }
        dis_min = dis_min.min(d2_dis);
        dis_max = dis_max.max(d2_dis);
        chg_min = chg_min.min(d2_chg);
        chg_max = chg_max.max(d2_chg);
    }

    let ragone = ragone_parameter(params.p_max, params);
    Ok(ConvexityAudit {
        discharge_second_diff_min: dis_min,
        discharge_second_diff_max: dis_max,
        charge_second_diff_min: chg_min,
        charge_second_diff_max: chg_max,
        discharge_convex: !saw_nan && dis_min >= -AUDIT_TOLERANCE,
        charge_concave: !saw_nan && chg_max <= AUDIT_TOLERANCE,
        ragone_at_p_max: ragone.value,
        ragone_regime_valid: ragone.regime_valid,
        step: h,
        tolerance: AUDIT_TOLERANCE,
    })
}

fn second_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}
