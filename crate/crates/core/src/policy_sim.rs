//! Week-by-week simulation of the policy induced by a Bellman table.
//!
//! Each week the slow plan is chosen against the training scenarios, then
//! the realised block is revealed and the recourse is optimised with the
//! same cost-to-go.

use std::io::Write;

use crate::error::{Error, Result};
use crate::intraweek::{evaluate_recourse, solve_week_dhd, SlowPlan};
use crate::scenario_io::{fmt_f64, Chronicle, ScenarioSet};
use crate::sdp_engine::BellmanTable;
use crate::system_model::{production, HourlyControl, HourlyUncertainty, SystemModel};

/// One simulated week.
#[derive(Debug, Clone, PartialEq)]
pub struct WeekRecord {
    pub start_stock: f64,
    pub slow_plan: SlowPlan,
    pub uncertainty: Vec<HourlyUncertainty>,
    pub controls: Vec<HourlyControl>,
    /// Stock at the end of each hour.
    pub stocks: Vec<f64>,
    pub cost: f64,
}

/// Full-horizon simulation result.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchTrace {
    pub weeks: Vec<WeekRecord>,
    pub terminal_stock: f64,
    pub final_cost: f64,
}

impl DispatchTrace {
    /// Operating costs plus the value of the terminal stock.
    pub fn total_cost(&self) -> f64 {
        self.weeks.iter().map(|w| w.cost).sum::<f64>() + self.final_cost
    }
}

/// Simulate `chronicle` from stock `x0` under the policy of `table`.
pub fn simulate_chronicle(
    model: &SystemModel,
    table: &BellmanTable,
    scenarios: &ScenarioSet,
    chronicle: &Chronicle,
    x0: f64,
) -> Result<DispatchTrace> {
    let tl = scenarios.timeline();
    if table.num_weeks() != tl.num_weeks() {
        return Err(Error::LengthMismatch {
            what: "Bellman table weeks vs timeline",
            expected: tl.num_weeks(),
            got: table.num_weeks(),
        });
    }
    chronicle.validate(&tl, model.num_units())?;
    let slow = model.slow_units();
    let hours = tl.hours_per_week();
    let mut x = x0;
    let mut weeks = Vec::with_capacity(tl.num_weeks());
    for (w, block) in chronicle.weeks.iter().enumerate() {
        let ctg = table.cost_to_go(w + 1)?;
        let slow_plan = if slow.is_empty() {
            SlowPlan {
                units: Vec::new(),
                commit: vec![Vec::new(); hours],
            }
        } else {
            solve_week_dhd(x, scenarios.week(w), &ctg, model)
                .map_err(|e| e.at(Some(w), None, None))?
                .slow_plan
        };
        let sol = evaluate_recourse(x, &slow_plan, block, &ctg, model)
            .map_err(|e| e.at(Some(w), None, None))?;
        let stocks = sol.stocks(x, model);
        weeks.push(WeekRecord {
            start_stock: x,
            slow_plan,
            uncertainty: block.clone(),
            controls: sol.controls,
            stocks,
            cost: sol.stage_cost,
        });
        x = sol.next_stock;
    }
    let terminal = x.clamp(model.storage.x_min, model.storage.x_max);
    let final_cost = model.final_cost.eval(terminal)?;
    Ok(DispatchTrace {
        weeks,
        terminal_stock: x,
        final_cost,
    })
}

/// Per-week indicators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeekKpi {
    pub cost: f64,
    pub ens: f64,
    pub pump: f64,
    pub turb: f64,
    pub start_stock: f64,
    pub end_stock: f64,
    pub unit_energy: Vec<f64>,
    pub unit_startups: Vec<f64>,
}

impl WeekKpi {
    fn of(rec: &WeekRecord) -> Self {
        let n = rec.controls.first().map_or(0, |c| c.commit.len());
        let mut k = WeekKpi {
            cost: rec.cost,
            start_stock: rec.start_stock,
            end_stock: rec.stocks.last().copied().unwrap_or(rec.start_stock),
            unit_energy: vec![0.0; n],
            unit_startups: vec![0.0; n],
            ..Default::default()
        };
        for (h, (ctrl, unc)) in rec.controls.iter().zip(&rec.uncertainty).enumerate() {
            k.ens += ctrl.ens;
            k.pump += ctrl.pump;
            k.turb += ctrl.turb;
            for i in 0..n {
                k.unit_energy[i] +=
                    production(ctrl.commit[i], ctrl.modulation[i], unc.availability[i]);
                if ctrl.commit[i] && (h == 0 || !rec.controls[h - 1].commit[i]) {
                    k.unit_startups[i] += 1.0;
                }
            }
        }
        k
    }

    fn add_scaled(&mut self, other: &WeekKpi, f: f64) {
        self.cost += f * other.cost;
        self.ens += f * other.ens;
        self.pump += f * other.pump;
        self.turb += f * other.turb;
        self.start_stock += f * other.start_stock;
        self.end_stock += f * other.end_stock;
        if self.unit_energy.len() < other.unit_energy.len() {
            self.unit_energy.resize(other.unit_energy.len(), 0.0);
            self.unit_startups.resize(other.unit_startups.len(), 0.0);
        }
        for (a, b) in self.unit_energy.iter_mut().zip(&other.unit_energy) {
            *a += f * b;
        }
        for (a, b) in self.unit_startups.iter_mut().zip(&other.unit_startups) {
            *a += f * b;
        }
    }
}

/// Indicators averaged over a set of traces.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiSummary {
    pub count: usize,
    pub total_cost: f64,
    pub final_cost: f64,
    /// Horizon totals; stocks hold the initial and terminal levels.
    pub horizon: WeekKpi,
    pub per_week: Vec<WeekKpi>,
}

/// Mean indicators over `traces`, which must share a horizon.
pub fn aggregate_kpis(traces: &[DispatchTrace]) -> Result<KpiSummary> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidModel("no traces to aggregate".into()))?;
    let weeks = first.weeks.len();
    if traces.iter().any(|t| t.weeks.len() != weeks) {
        return Err(Error::InvalidModel(
            "traces cover different horizons".into(),
        ));
    }
    let f = 1.0 / traces.len() as f64;
    let mut per_week = vec![WeekKpi::default(); weeks];
    let mut horizon = WeekKpi::default();
    let mut total_cost = 0.0;
    let mut final_cost = 0.0;
    for t in traces {
        let mut whole = WeekKpi::default();
        for (w, rec) in t.weeks.iter().enumerate() {
            let k = WeekKpi::of(rec);
            per_week[w].add_scaled(&k, f);
            whole.add_scaled(&k, 1.0);
        }
        whole.start_stock = t.weeks.first().map_or(t.terminal_stock, |w| w.start_stock);
        whole.end_stock = t.terminal_stock;
        horizon.add_scaled(&whole, f);
        total_cost += f * t.total_cost();
        final_cost += f * t.final_cost;
    }
    Ok(KpiSummary {
        count: traces.len(),
        total_cost,
        final_cost,
        horizon,
        per_week,
    })
}

/// One row per simulated hour:
/// `chronicle,week,hour,demand,stock,pump,turb,ens,unit_i_commit,unit_i_power,...`.
pub fn write_trace_csv<W: Write>(
    out: W,
    chronicle: usize,
    trace: &DispatchTrace,
    num_units: usize,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "chronicle",
        "week",
        "hour",
        "demand",
        "stock",
        "pump",
        "turb",
        "ens",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for i in 1..=num_units {
        header.push(format!("unit_{i}_commit"));
        header.push(format!("unit_{i}_power"));
    }
    wtr.write_record(&header)?;
    for (w, rec) in trace.weeks.iter().enumerate() {
        for (h, (ctrl, unc)) in rec.controls.iter().zip(&rec.uncertainty).enumerate() {
            let mut row = vec![
                chronicle.to_string(),
                w.to_string(),
                (h + 1).to_string(),
                fmt_f64(unc.residual_demand),
                fmt_f64(rec.stocks[h]),
                fmt_f64(ctrl.pump),
                fmt_f64(ctrl.turb),
                fmt_f64(ctrl.ens),
            ];
            for i in 0..num_units {
                row.push(u8::from(ctrl.commit[i]).to_string());
                row.push(fmt_f64(production(
                    ctrl.commit[i],
                    ctrl.modulation[i],
                    unc.availability[i],
                )));
            }
            wtr.write_record(&row)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// KPI table: per label a horizon row (`week` = `all`) then one row per week.
pub fn write_kpi_csv<W: Write>(
    out: W,
    summaries: &[(&str, &KpiSummary)],
    num_units: usize,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "policy",
        "week",
        "traces",
        "cost",
        "ens",
        "pump",
        "turb",
        "start_stock",
        "end_stock",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for i in 1..=num_units {
        header.push(format!("unit_{i}_energy"));
        header.push(format!("unit_{i}_startups"));
    }
    wtr.write_record(&header)?;
    let record = |label: &str, week: String, count: usize, cost: f64, k: &WeekKpi| {
        let mut row = vec![
            label.to_string(),
            week,
            count.to_string(),
            fmt_f64(cost),
            fmt_f64(k.ens),
            fmt_f64(k.pump),
            fmt_f64(k.turb),
            fmt_f64(k.start_stock),
            fmt_f64(k.end_stock),
        ];
        for i in 0..num_units {
            row.push(fmt_f64(k.unit_energy.get(i).copied().unwrap_or(0.0)));
            row.push(fmt_f64(k.unit_startups.get(i).copied().unwrap_or(0.0)));
        }
        row
    };
    for (label, s) in summaries {
        wtr.write_record(record(
            label,
            "all".into(),
            s.count,
            s.total_cost,
            &s.horizon,
        ))?;
        for (w, k) in s.per_week.iter().enumerate() {
            wtr.write_record(record(label, w.to_string(), s.count, k.cost, k))?;
        }
    }
    wtr.flush()?;
    Ok(())
}
