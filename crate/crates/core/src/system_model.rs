//! Physical and economic primitives: storage, thermal fleet, balance and costs.
//!
//! One time step is one hour, so power (MW) and energy (MWh) coincide.

use crate::error::{Error, Result};
use crate::pwl::PiecewiseLinear;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Storage {
    pub x_min: f64,
    pub x_max: f64,
    pub pump_max: f64,
    pub turb_max: f64,
    /// Pumping efficiency in `[0, 1]`.
    pub eta: f64,
}

impl Storage {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.x_min,
            self.x_max,
            self.pump_max,
            self.turb_max,
            self.eta,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidModel(
                "storage parameters must be finite".into(),
            ));
        }
        if self.x_min >= self.x_max {
            return Err(Error::InvalidModel(format!(
                "storage x_min ({}) must be below x_max ({})",
                self.x_min, self.x_max
            )));
        }
        if self.pump_max < 0.0 || self.turb_max < 0.0 {
            return Err(Error::InvalidModel(
                "storage power limits must be >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidModel(format!(
                "storage efficiency {} outside [0, 1]",
                self.eta
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.x_min - tol && x <= self.x_max + tol
    }
}

/// Whether a unit's on/off decision is planned before the week (slow) or
/// taken as recourse (fast).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeedClass {
    Slow,
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalUnit {
    #[serde(default)]
    pub name: String,
    pub p_min: f64,
    pub p_max: f64,
    pub startup_cost: f64,
    pub variable_cost: f64,
    pub speed_class: SpeedClass,
}

impl ThermalUnit {
    pub fn validate(&self) -> Result<()> {
        let ok = self.p_min.is_finite()
            && self.p_max.is_finite()
            && self.p_min > 0.0
            && self.p_min <= self.p_max;
        if !ok {
            return Err(Error::InvalidModel(format!(
                "unit `{}`: need 0 < p_min <= p_max, got [{}, {}]",
                self.name, self.p_min, self.p_max
            )));
        }
        if !(self.startup_cost >= 0.0 && self.variable_cost >= 0.0)
            || !self.startup_cost.is_finite()
            || !self.variable_cost.is_finite()
        {
            return Err(Error::InvalidModel(format!(
                "unit `{}`: costs must be finite and >= 0",
                self.name
            )));
        }
        Ok(())
    }

    pub fn is_slow(&self) -> bool {
        self.speed_class == SpeedClass::Slow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub storage: Storage,
    pub units: Vec<ThermalUnit>,
    /// Penalty per MWh of energy not supplied.
    pub ens_penalty: f64,
    /// Value given to the terminal stock, defined on `[x_min, x_max]`.
    pub final_cost: PiecewiseLinear,
    pub initial_stock: f64,
}

impl SystemModel {
    /// Build and validate a model.
    pub fn new(
        storage: Storage,
        units: Vec<ThermalUnit>,
        ens_penalty: f64,
        final_cost: PiecewiseLinear,
        initial_stock: f64,
    ) -> Result<Self> {
        let model = Self {
            storage,
            units,
            ens_penalty,
            final_cost,
            initial_stock,
        };
        model.validate()?;
        Ok(model)
    }

    /// The default penalty: ten times the most expensive variable cost.
    pub fn default_ens_penalty(units: &[ThermalUnit]) -> f64 {
        let max = units.iter().map(|u| u.variable_cost).fold(0.0, f64::max);
        if max > 0.0 {
            10.0 * max
        } else {
            1.0
        }
    }

    /// `K(x) = -price·x` on the storage range.
    pub fn linear_final_cost(storage: &Storage, price: f64) -> Result<PiecewiseLinear> {
        PiecewiseLinear::affine(storage.x_min, storage.x_max, 0.0, -price)
    }

    pub fn validate(&self) -> Result<()> {
        self.storage.validate()?;
        for unit in &self.units {
            unit.validate()?;
        }
        let max_var = self
            .units
            .iter()
            .map(|u| u.variable_cost)
            .fold(0.0, f64::max);
        if !(self.ens_penalty.is_finite() && self.ens_penalty > max_var) {
            return Err(Error::InvalidModel(format!(
                "ens_penalty ({}) must exceed every variable cost (max {max_var})",
                self.ens_penalty
            )));
        }
        let (lo, hi) = (self.final_cost.lo(), self.final_cost.hi());
        if lo > self.storage.x_min || hi < self.storage.x_max {
            return Err(Error::InvalidModel(format!(
                "final cost defined on [{lo}, {hi}] does not cover the storage range [{}, {}]",
                self.storage.x_min, self.storage.x_max
            )));
        }
        if !self.storage.contains(self.initial_stock, 0.0) {
            return Err(Error::InvalidModel(format!(
                "initial stock {} outside the storage range",
                self.initial_stock
            )));
        }
        Ok(())
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    pub fn slow_units(&self) -> Vec<usize> {
        (0..self.units.len())
            .filter(|&i| self.units[i].is_slow())
            .collect()
    }

    pub fn fast_units(&self) -> Vec<usize> {
        (0..self.units.len())
            .filter(|&i| !self.units[i].is_slow())
            .collect()
    }

    /// Same model with every cost parameter multiplied by `factor`.
    pub fn with_costs_scaled(&self, factor: f64) -> Self {
        let mut scaled = self.clone();
        for unit in &mut scaled.units {
            unit.startup_cost *= factor;
            unit.variable_cost *= factor;
        }
        scaled.ens_penalty *= factor;
        scaled.final_cost = self.final_cost.scaled(factor);
        scaled
    }

    /// Same model with every unit's speed class set to `class`.
    pub fn with_all_units(&self, class: SpeedClass) -> Self {
        let mut m = self.clone();
        for unit in &mut m.units {
            unit.speed_class = class;
        }
        m
    }
}

/// Controls applied during one hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyControl {
    pub commit: Vec<bool>,
    pub modulation: Vec<f64>,
    pub pump: f64,
    pub turb: f64,
    pub ens: f64,
}

impl HourlyControl {
    pub fn idle(num_units: usize) -> Self {
        Self {
            commit: vec![false; num_units],
            modulation: vec![0.0; num_units],
            pump: 0.0,
            turb: 0.0,
            ens: 0.0,
        }
    }
}

/// Uncertainty revealed for one hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyUncertainty {
    pub residual_demand: f64,
    pub availability: Vec<bool>,
}

impl HourlyUncertainty {
    pub fn new(residual_demand: f64, availability: Vec<bool>) -> Self {
        Self {
            residual_demand,
            availability,
        }
    }
}

/// Storage level after one hour: `x + η·pump − turb`.
pub fn hourly_dynamics(x: f64, pump: f64, turb: f64, storage: &Storage) -> f64 {
    x + storage.eta * pump - turb
}

/// Storage level after a week, as the closed-form sum of hourly increments.
pub fn weekly_dynamics(x: f64, pumps: &[f64], turbs: &[f64], storage: &Storage) -> Result<f64> {
    if pumps.len() != turbs.len() {
        return Err(Error::LengthMismatch {
            what: "weekly pumping vs turbining",
            expected: pumps.len(),
            got: turbs.len(),
        });
    }
    Ok(pumps
        .iter()
        .zip(turbs)
        .fold(x, |acc, (&p, &t)| hourly_dynamics(acc, p, t, storage)))
}

/// Storage trajectory over a week, one entry per hour end.
pub fn stock_trajectory(x: f64, controls: &[HourlyControl], storage: &Storage) -> Vec<f64> {
    let mut level = x;
    controls
        .iter()
        .map(|c| {
            level = hourly_dynamics(level, c.pump, c.turb, storage);
            level
        })
        .collect()
}

/// Output of a unit: the modulation when committed and available, else zero.
pub fn production(commit: bool, modulation: f64, available: bool) -> f64 {
    if commit && available {
        modulation
    } else {
        0.0
    }
}

/// Signed energy balance `(turb + Σp + ens) − (pump + demand)`; feasible when ≥ 0.
pub fn balance_residual(ctrl: &HourlyControl, unc: &HourlyUncertainty) -> f64 {
    let thermal: f64 = ctrl
        .commit
        .iter()
        .zip(&ctrl.modulation)
        .zip(&unc.availability)
        .map(|((&u, &z), &a)| production(u, z, a))
        .sum();
    (ctrl.turb + thermal + ctrl.ens) - (ctrl.pump + unc.residual_demand)
}

/// Start-up plus variable cost of the fleet plus the ENS penalty for one hour.
pub fn hourly_cost(
    commit_now: &[bool],
    commit_prev: &[bool],
    productions: &[f64],
    ens: f64,
    model: &SystemModel,
) -> f64 {
    let thermal: f64 = model
        .units
        .iter()
        .zip(commit_now.iter().zip(commit_prev))
        .zip(productions)
        .map(|((unit, (&now, &prev)), &p)| {
            let startup = if now && !prev { unit.startup_cost } else { 0.0 };
            startup + unit.variable_cost * p
        })
        .sum();
    thermal + model.ens_penalty * ens
}

/// Sum of hourly costs over a week; every unit is considered off before hour 0.
pub fn weekly_cost(
    controls: &[HourlyControl],
    block: &[HourlyUncertainty],
    model: &SystemModel,
) -> Result<f64> {
    if controls.len() != block.len() {
        return Err(Error::LengthMismatch {
            what: "weekly controls vs uncertainties",
            expected: block.len(),
            got: controls.len(),
        });
    }
    let n = model.num_units();
    let off = vec![false; n];
    let mut total = 0.0;
    for (h, (ctrl, unc)) in controls.iter().zip(block).enumerate() {
        let prev = if h == 0 {
            &off
        } else {
            &controls[h - 1].commit
        };
        let productions: Vec<f64> = (0..n)
            .map(|i| production(ctrl.commit[i], ctrl.modulation[i], unc.availability[i]))
            .collect();
        total += hourly_cost(&ctrl.commit, prev, &productions, ctrl.ens, model);
    }
    Ok(total)
}
