//! Depth-first branch and bound over unit-commitment binaries.
//!
//! Binaries are laid out unit-major (`unit * H + hour`) and fixed in that
//! order, `off` before `on`. An incumbent is only replaced on strict
//! improvement, so among optimal patterns the lexicographically smallest
//! one is returned.

use super::continuous::{
    continuous_solve, continuous_value, split_storage_move, storage_cost_curve, ConvexPwl, Seg,
    SupplyCurve,
};
use super::WeekSolution;
use crate::error::{Error, Result};
use crate::pwl::PiecewiseLinear;
use crate::system_model::{HourlyControl, HourlyUncertainty, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Off,
    On,
    Free,
}

/// Incumbent threshold: a candidate must come in below this to replace it.
fn threshold(value: f64) -> f64 {
    if value.is_finite() {
        value - 1e-12 * value.abs().max(1.0)
    } else {
        value
    }
}

/// One week under one uncertainty block.
pub(crate) struct WeekProblem<'a> {
    pub model: &'a SystemModel,
    pub block: &'a [HourlyUncertainty],
    pub ctg: &'a PiecewiseLinear,
    pub x: f64,
}

impl<'a> WeekProblem<'a> {
    pub fn hours(&self) -> usize {
        self.block.len()
    }

    /// Certain start-up costs and per-MWh surcharges for undecided cells.
    fn startup_relaxation(&self, st: &[Status]) -> (f64, Vec<f64>) {
        let h_len = self.hours();
        let mut fixed = 0.0;
        let mut surcharge = vec![0.0; st.len()];
        for (i, unit) in self.model.units.iter().enumerate() {
            let row = &st[i * h_len..(i + 1) * h_len];
            let mut h = 0;
            while h < h_len {
                match row[h] {
                    Status::On => {
                        if h == 0 || row[h - 1] == Status::Off {
                            fixed += unit.startup_cost;
                        }
                        h += 1;
                    }
                    Status::Off => h += 1,
                    Status::Free => {
                        let a = h;
                        while h < h_len && row[h] == Status::Free {
                            h += 1;
                        }
                        let prev = if a == 0 { Status::Off } else { row[a - 1] };
                        if prev == Status::On || unit.startup_cost == 0.0 {
                            continue;
                        }
                        if h < h_len && row[h] == Status::On {
                            fixed += unit.startup_cost;
                            continue;
                        }
                        let avail = (a..h).filter(|&k| self.block[k].availability[i]).count();
                        if avail > 0 {
                            let per_mwh = unit.startup_cost / (unit.p_max * avail as f64);
                            for k in a..h {
                                surcharge[i * h_len + k] = per_mwh;
                            }
                        }
                    }
                }
            }
        }
        (fixed, surcharge)
    }

    /// Hourly cost curves in the net storage change.
    fn hour_curves(&self, st: &[Status], surcharge: &[f64]) -> Vec<ConvexPwl> {
        let h_len = self.hours();
        (0..h_len)
            .map(|h| {
                let unc = &self.block[h];
                let mut fixed = 0.0;
                let mut min_output = 0.0;
                let mut blocks = Vec::with_capacity(self.model.units.len());
                for (i, unit) in self.model.units.iter().enumerate() {
                    if !unc.availability[i] {
                        continue;
                    }
                    match st[i * h_len + h] {
                        Status::On => {
                            fixed += unit.variable_cost * unit.p_min;
                            min_output += unit.p_min;
                            blocks.push(Seg {
                                len: unit.p_max - unit.p_min,
                                slope: unit.variable_cost,
                            });
                        }
                        Status::Free => blocks.push(Seg {
                            len: unit.p_max,
                            slope: unit.variable_cost + surcharge[i * h_len + h],
                        }),
                        Status::Off => {}
                    }
                }
                let supply = SupplyCurve::new(fixed, min_output, blocks, self.model.ens_penalty);
                storage_cost_curve(&supply, unc.residual_demand, &self.model.storage)
            })
            .collect()
    }

    /// Lower bound on the week value; exact when nothing is `Free`.
    pub fn bound(&self, st: &[Status]) -> f64 {
        let (startups, surcharge) = self.startup_relaxation(st);
        let curves = self.hour_curves(st, &surcharge);
        startups + continuous_value(self.x, &curves, self.ctg, &self.model.storage)
    }

    /// Best completion of `st` over the `free` cells strictly below `limit`.
    pub fn search(
        &self,
        st: &mut [Status],
        free: &[usize],
        limit: f64,
    ) -> Option<(f64, Vec<bool>)> {
        let mut best = Incumbent {
            threshold: limit,
            found: None,
        };
        self.dfs(st, free, &mut best);
        best.found
    }

    fn dfs(&self, st: &mut [Status], free: &[usize], best: &mut Incumbent) {
        let b = self.bound(st);
        if b.is_nan() || b >= best.threshold {
            return;
        }
        match free.split_first() {
            None => {
                best.threshold = threshold(b);
                best.found = Some((b, st.iter().map(|&s| s == Status::On).collect()));
            }
            Some((&cell, rest)) => {
                for v in [Status::Off, Status::On] {
                    st[cell] = v;
                    self.dfs(st, rest, best);
                }
                st[cell] = Status::Free;
            }
        }
    }

    /// Optimal dispatch for a fixed commitment matrix (unit-major).
    pub fn solution(&self, commits: &[bool]) -> Result<WeekSolution> {
        let h_len = self.hours();
        let n = self.model.num_units();
        let st: Vec<Status> = commits
            .iter()
            .map(|&c| if c { Status::On } else { Status::Off })
            .collect();
        let curves = self.hour_curves(&st, &vec![0.0; st.len()]);
        let storage = &self.model.storage;
        let (_, moves) = continuous_solve(self.x, &curves, self.ctg, storage)
            .ok_or_else(|| Error::solver("storage bounds cannot be met"))?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            self.model.units[a]
                .variable_cost
                .total_cmp(&self.model.units[b].variable_cost)
        });
        let mut controls = Vec::with_capacity(h_len);
        for (h, &q) in moves.iter().enumerate() {
            let unc = &self.block[h];
            let (pump, turb) = split_storage_move(q, storage);
            let commit: Vec<bool> = (0..n).map(|i| commits[i * h_len + h]).collect();
            let online = |i: usize| commit[i] && unc.availability[i];
            let mut modulation: Vec<f64> = (0..n)
                .map(|i| {
                    if online(i) {
                        self.model.units[i].p_min
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut rest = unc.residual_demand + pump - turb - modulation.iter().sum::<f64>();
            for &i in &order {
                if rest <= 0.0 {
                    break;
                }
                if online(i) {
                    let extra = rest.min(self.model.units[i].p_max - self.model.units[i].p_min);
                    modulation[i] += extra;
                    rest -= extra;
                }
            }
            controls.push(HourlyControl {
                commit,
                modulation,
                pump,
                turb,
                ens: rest.max(0.0),
            });
        }
        WeekSolution::from_controls(self.x, controls, self.block, self.ctg, self.model)
    }
}

struct Incumbent {
    threshold: f64,
    found: Option<(f64, Vec<bool>)>,
}

/// Cells of the given units, unit-major.
pub(crate) fn cells(units: &[usize], hours: usize) -> Vec<usize> {
    units
        .iter()
        .flat_map(|&i| (0..hours).map(move |h| i * hours + h))
        .collect()
}

/// Outcome of the two-stage search.
pub(crate) struct DhdSearch {
    pub slow_status: Vec<Status>,
    pub recourse: Vec<Vec<bool>>,
}

/// Shared slow plan, then per-scenario fast recourse, minimising the
/// scenario sum.
pub(crate) fn search_dhd(
    problems: &[WeekProblem],
    slow: &[usize],
    fast: &[usize],
) -> Option<DhdSearch> {
    let hours = problems.first()?.hours();
    let n_cells = problems[0].model.num_units() * hours;
    let mut st = vec![Status::Free; n_cells];
    let mut state = DhdState {
        problems,
        fast,
        threshold: f64::INFINITY,
        best: None,
    };
    state.dfs(&mut st, slow);
    state.best
}

struct DhdState<'p, 'a> {
    problems: &'p [WeekProblem<'a>],
    fast: &'p [usize],
    threshold: f64,
    best: Option<DhdSearch>,
}

impl DhdState<'_, '_> {
    fn dfs(&mut self, st: &mut [Status], slow: &[usize]) {
        let bounds: Vec<f64> = self.problems.iter().map(|p| p.bound(st)).collect();
        let total: f64 = bounds.iter().sum();
        if total.is_nan() || total >= self.threshold {
            return;
        }
        match slow.split_first() {
            Some((&cell, rest)) => {
                for v in [Status::Off, Status::On] {
                    st[cell] = v;
                    self.dfs(st, rest);
                }
                st[cell] = Status::Free;
            }
            None => self.leaf(st, &bounds),
        }
    }

    fn leaf(&mut self, st: &mut [Status], bounds: &[f64]) {
        let mut acc = 0.0;
        let mut recourse = Vec::with_capacity(self.problems.len());
        for (n, problem) in self.problems.iter().enumerate() {
            let remaining: f64 = bounds[n + 1..].iter().sum();
            let limit = self.threshold - acc - remaining;
            let mut local = st.to_vec();
            match problem.search(&mut local, self.fast, limit) {
                Some((v, commits)) => {
                    acc += v;
                    recourse.push(commits);
                }
                None => return,
            }
        }
        if acc < self.threshold {
            self.threshold = threshold(acc);
            self.best = Some(DhdSearch {
                slow_status: st.to_vec(),
                recourse,
            });
        }
    }
}
