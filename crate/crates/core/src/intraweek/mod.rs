//! Single-week optimisation under the two information structures.
//!
//! Hazard-decision (HD): the whole week is planned once its uncertainty
//! block is known. Decision-hazard-decision (DHD): the on/off plan of the
//! slow units is fixed before the block is revealed and shared across the
//! training scenarios; everything else is recourse.

mod bnb;
mod continuous;
mod oracle;
mod wphr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pwl::{PiecewiseLinear, DOMAIN_TOL};
use crate::system_model::{
    stock_trajectory, weekly_cost, weekly_dynamics, HourlyControl, HourlyUncertainty, SystemModel,
};
use bnb::{cells, search_dhd, Status, WeekProblem};

pub use oracle::{brute_force_week, ORACLE_MAX_COMBINATIONS};
pub use wphr::{
    wphr_week_toy, ScenarioTree, TreeNode, WPHR_MAX_BRANCHING, WPHR_MAX_HOURS, WPHR_MAX_UNITS,
};

/// Value of the end-of-week stock, `V_{w+1}`.
pub type CostToGo = PiecewiseLinear;

/// When commitment decisions are taken relative to the weekly uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InformationStructure {
    Hd,
    Dhd,
}

impl InformationStructure {
    pub fn as_str(self) -> &'static str {
        match self {
            InformationStructure::Hd => "hd",
            InformationStructure::Dhd => "dhd",
        }
    }
}

/// Optimal controls for one week and one uncertainty block.
#[derive(Debug, Clone, PartialEq)]
pub struct WeekSolution {
    /// `stage_cost + V(next_stock)`.
    pub value: f64,
    pub stage_cost: f64,
    pub next_stock: f64,
    pub controls: Vec<HourlyControl>,
}

impl WeekSolution {
    pub(crate) fn from_controls(
        x: f64,
        controls: Vec<HourlyControl>,
        block: &[HourlyUncertainty],
        ctg: &CostToGo,
        model: &SystemModel,
    ) -> Result<Self> {
        let pumps: Vec<f64> = controls.iter().map(|c| c.pump).collect();
        let turbs: Vec<f64> = controls.iter().map(|c| c.turb).collect();
        let next_stock = weekly_dynamics(x, &pumps, &turbs, &model.storage)?;
        let stage_cost = weekly_cost(&controls, block, model)?;
        let value = stage_cost + ctg.eval(next_stock)?;
        Ok(Self {
            value,
            stage_cost,
            next_stock,
            controls,
        })
    }

    /// End-of-hour stock levels.
    pub fn stocks(&self, x: f64, model: &SystemModel) -> Vec<f64> {
        stock_trajectory(x, &self.controls, &model.storage)
    }
}

/// On/off schedule of the slow units for one week.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlowPlan {
    /// Model indices of the slow units, ascending.
    pub units: Vec<usize>,
    /// `commit[hour][k]` for slow unit `units[k]`.
    pub commit: Vec<Vec<bool>>,
}

impl SlowPlan {
    fn status(&self, model: &SystemModel, hours: usize) -> Result<Vec<Status>> {
        if self.commit.len() != hours {
            return Err(Error::LengthMismatch {
                what: "slow plan hours",
                expected: hours,
                got: self.commit.len(),
            });
        }
        if self.units != model.slow_units() {
            return Err(Error::InvalidModel(
                "slow plan does not match the model's slow units".into(),
            ));
        }
        let mut st = vec![Status::Free; model.num_units() * hours];
        for (h, row) in self.commit.iter().enumerate() {
            if row.len() != self.units.len() {
                return Err(Error::LengthMismatch {
                    what: "slow plan units",
                    expected: self.units.len(),
                    got: row.len(),
                });
            }
            for (k, &i) in self.units.iter().enumerate() {
                st[i * hours + h] = if row[k] { Status::On } else { Status::Off };
            }
        }
        Ok(st)
    }

    fn from_commits(units: Vec<usize>, commits: &[bool], hours: usize) -> Self {
        let commit = (0..hours)
            .map(|h| units.iter().map(|&i| commits[i * hours + h]).collect())
            .collect();
        Self { units, commit }
    }
}

/// Solution of the two-stage week problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DhdWeekSolution {
    /// Mean of the per-scenario values.
    pub value: f64,
    pub slow_plan: SlowPlan,
    pub per_scenario: Vec<WeekSolution>,
}

/// Equal-weight mean with a fixed summation order.
pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn check_inputs(
    x: f64,
    block: &[HourlyUncertainty],
    ctg: &CostToGo,
    model: &SystemModel,
) -> Result<()> {
    if block.is_empty() {
        return Err(Error::InvalidModel("empty week block".into()));
    }
    for (h, unc) in block.iter().enumerate() {
        if unc.availability.len() != model.num_units() {
            return Err(Error::LengthMismatch {
                what: "availability vector",
                expected: model.num_units(),
                got: unc.availability.len(),
            });
        }
        if !unc.residual_demand.is_finite() {
            return Err(Error::InvalidModel(format!(
                "non-finite demand at hour {h}"
            )));
        }
    }
    let s = &model.storage;
    if !s.contains(x, DOMAIN_TOL) {
        return Err(Error::OutOfRange(format!(
            "stock {x} outside [{}, {}]",
            s.x_min, s.x_max
        )));
    }
    if ctg.lo() > s.x_min + DOMAIN_TOL || ctg.hi() < s.x_max - DOMAIN_TOL {
        return Err(Error::InvalidModel(format!(
            "cost-to-go domain [{}, {}] does not cover the storage range",
            ctg.lo(),
            ctg.hi()
        )));
    }
    Ok(())
}

fn clamp_stock(x: f64, model: &SystemModel) -> f64 {
    x.clamp(model.storage.x_min, model.storage.x_max)
}

/// Hazard-decision week problem for one known block.
pub fn solve_week_hd(
    x: f64,
    block: &[HourlyUncertainty],
    ctg: &CostToGo,
    model: &SystemModel,
) -> Result<WeekSolution> {
    check_inputs(x, block, ctg, model)?;
    let problem = WeekProblem {
        model,
        block,
        ctg,
        x: clamp_stock(x, model),
    };
    let hours = block.len();
    let all: Vec<usize> = (0..model.num_units()).collect();
    let mut st = vec![Status::Free; model.num_units() * hours];
    let (_, commits) = problem
        .search(&mut st, &cells(&all, hours), f64::INFINITY)
        .ok_or_else(|| Error::solver("no commitment pattern found"))?;
    problem.solution(&commits)
}

/// Two-stage week problem: one slow plan shared by the scenario blocks.
pub fn solve_week_dhd(
    x: f64,
    blocks: &[Vec<HourlyUncertainty>],
    ctg: &CostToGo,
    model: &SystemModel,
) -> Result<DhdWeekSolution> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidModel("no scenario blocks".into()))?;
    let hours = first.len();
    for b in blocks {
        check_inputs(x, b, ctg, model)?;
        if b.len() != hours {
            return Err(Error::LengthMismatch {
                what: "scenario block hours",
                expected: hours,
                got: b.len(),
            });
        }
    }
    let x = clamp_stock(x, model);
    let problems: Vec<WeekProblem> = blocks
        .iter()
        .map(|block| WeekProblem {
            model,
            block,
            ctg,
            x,
        })
        .collect();
    let slow_units = model.slow_units();
    let found = search_dhd(
        &problems,
        &cells(&slow_units, hours),
        &cells(&model.fast_units(), hours),
    )
    .ok_or_else(|| Error::solver("no slow plan found"))?;
    let per_scenario = problems
        .iter()
        .zip(&found.recourse)
        .enumerate()
        .map(|(n, (p, commits))| p.solution(commits).map_err(|e| e.at(None, None, Some(n))))
        .collect::<Result<Vec<_>>>()?;
    let slow_commits: Vec<bool> = found.slow_status.iter().map(|&s| s == Status::On).collect();
    let values: Vec<f64> = per_scenario.iter().map(|s| s.value).collect();
    Ok(DhdWeekSolution {
        value: mean(&values),
        slow_plan: SlowPlan::from_commits(slow_units, &slow_commits, hours),
        per_scenario,
    })
}

/// Best fast-unit recourse and dispatch once the slow plan is fixed.
pub fn evaluate_recourse(
    x: f64,
    slow_plan: &SlowPlan,
    block: &[HourlyUncertainty],
    ctg: &CostToGo,
    model: &SystemModel,
) -> Result<WeekSolution> {
    check_inputs(x, block, ctg, model)?;
    let hours = block.len();
    let mut st = slow_plan.status(model, hours)?;
    let problem = WeekProblem {
        model,
        block,
        ctg,
        x: clamp_stock(x, model),
    };
    let (_, commits) = problem
        .search(&mut st, &cells(&model.fast_units(), hours), f64::INFINITY)
        .ok_or_else(|| Error::solver("no recourse found"))?;
    problem.solution(&commits)
}
