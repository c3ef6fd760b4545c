//! Backward Bellman recursion on a regular storage grid.
//!
//! Each week's row is computed from the next one: at every grid point the
//! week problem is solved with the next row, interpolated linearly, as the
//! cost-to-go. Grid points are processed in parallel; scenario sums are
//! always taken in scenario order so the result does not depend on the
//! schedule.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::intraweek::{
    brute_force_week, mean, solve_week_dhd, solve_week_hd, wphr_week_toy, CostToGo,
    InformationStructure, ScenarioTree,
};
use crate::pwl::{PiecewiseLinear, DOMAIN_TOL};
use crate::scenario_io::{fmt_f64, ScenarioSet};
use crate::system_model::{HourlyUncertainty, Storage, SystemModel};
use crate::timeline::Timeline;

/// Relative tolerance for the pointwise `HD ≤ DHD` check.
pub const ORDERING_TOL: f64 = 1e-6;
/// Relative gap above which a grid point counts as strictly ordered.
pub const STRICT_GAP: f64 = 1e-4;

/// Regular grid on `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    x_min: f64,
    x_max: f64,
    points: Vec<f64>,
}

impl StateGrid {
    pub fn new(x_min: f64, x_max: f64, num_points: usize) -> Result<Self> {
        if num_points < 2 {
            return Err(Error::InvalidModel(format!(
                "a state grid needs at least 2 points, got {num_points}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::InvalidModel(format!(
                "invalid grid range [{x_min}, {x_max}]"
            )));
        }
        let last = (num_points - 1) as f64;
        let mut points: Vec<f64> = (0..num_points)
            .map(|k| x_min + (x_max - x_min) * (k as f64 / last))
            .collect();
        points[num_points - 1] = x_max;
        Ok(Self {
            x_min,
            x_max,
            points,
        })
    }

    /// Grid spanning the storage range.
    pub fn for_storage(storage: &Storage, num_points: usize) -> Result<Self> {
        Self::new(storage.x_min, storage.x_max, num_points)
    }

    /// Same range with the step halved.
    pub fn refined(&self) -> Self {
        Self::new(self.x_min, self.x_max, 2 * self.points.len() - 1).expect("valid grid")
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.points.len() - 1) as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Midpoints of consecutive grid points.
    pub fn midpoints(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }
}

/// Bellman values on the grid for weeks `0..=W`; row `W` is the final cost.
#[derive(Debug, Clone, PartialEq)]
pub struct BellmanTable {
    structure: InformationStructure,
    grid: StateGrid,
    rows: Vec<Vec<f64>>,
}

impl BellmanTable {
    pub fn new(
        structure: InformationStructure,
        grid: StateGrid,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidModel(
                "a Bellman table needs at least one week".into(),
            ));
        }
        for (w, row) in rows.iter().enumerate() {
            if row.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    what: "Bellman row",
                    expected: grid.len(),
                    got: row.len(),
                });
            }
            if let Some(k) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "non-finite Bellman value at week {w}, grid point {k}"
                )));
            }
        }
        Ok(Self {
            structure,
            grid,
            rows,
        })
    }

    pub fn structure(&self) -> InformationStructure {
        self.structure
    }

    pub fn grid(&self) -> &StateGrid {
        &self.grid
    }

    pub fn num_weeks(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn row(&self, week: usize) -> &[f64] {
        &self.rows[week]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Row `week` as an interpolated function of the stock.
    pub fn cost_to_go(&self, week: usize) -> Result<CostToGo> {
        let row = self.rows.get(week).ok_or_else(|| {
            Error::OutOfRange(format!("week {week} outside [0, {}]", self.num_weeks()))
        })?;
        PiecewiseLinear::new(self.grid.points.clone(), row.clone())
    }
}

fn check_setup(
    model: &SystemModel,
    scenarios: &ScenarioSet,
    grid: &StateGrid,
    tl: &Timeline,
) -> Result<()> {
    if scenarios.timeline() != *tl {
        return Err(Error::InvalidModel(
            "scenario set and timeline disagree".into(),
        ));
    }
    if scenarios.num_units() != model.num_units() {
        return Err(Error::LengthMismatch {
            what: "units in scenarios vs model",
            expected: model.num_units(),
            got: scenarios.num_units(),
        });
    }
    let s = &model.storage;
    if (grid.x_min - s.x_min).abs() > DOMAIN_TOL || (grid.x_max - s.x_max).abs() > DOMAIN_TOL {
        return Err(Error::InvalidModel(format!(
            "grid [{}, {}] does not match the storage range [{}, {}]",
            grid.x_min, grid.x_max, s.x_min, s.x_max
        )));
    }
    Ok(())
}

fn backward(
    model: &SystemModel,
    scenarios: &ScenarioSet,
    grid: &StateGrid,
    tl: &Timeline,
    week_value: impl Fn(f64, &[Vec<HourlyUncertainty>], &CostToGo) -> Result<f64> + Sync,
) -> Result<Vec<Vec<f64>>> {
    check_setup(model, scenarios, grid, tl)?;
    let weeks = tl.num_weeks();
    let mut rows = vec![Vec::new(); weeks + 1];
    rows[weeks] = grid
        .points
        .iter()
        .map(|&x| model.final_cost.eval(x))
        .collect::<Result<Vec<_>>>()?;
    for w in (0..weeks).rev() {
        let ctg = PiecewiseLinear::new(grid.points.clone(), rows[w + 1].clone())?;
        let blocks = scenarios.week(w);
        rows[w] = grid
            .points
            .par_iter()
            .enumerate()
            .map(|(k, &x)| week_value(x, blocks, &ctg).map_err(|e| e.at(Some(w), Some(k), None)))
            .collect::<Result<Vec<_>>>()?;
    }
    Ok(rows)
}

fn week_value(
    structure: InformationStructure,
    x: f64,
    blocks: &[Vec<HourlyUncertainty>],
    ctg: &CostToGo,
    model: &SystemModel,
) -> Result<f64> {
    match structure {
        InformationStructure::Hd => {
            let values = blocks
                .iter()
                .enumerate()
                .map(|(n, b)| {
                    solve_week_hd(x, b, ctg, model)
                        .map(|s| s.value)
                        .map_err(|e| e.at(None, None, Some(n)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(mean(&values))
        }
        InformationStructure::Dhd => Ok(solve_week_dhd(x, blocks, ctg, model)?.value),
    }
}

/// Hazard-decision recursion: each block is optimised with full knowledge.
pub fn solve_bellman_hd(
    model: &SystemModel,
    scenarios: &ScenarioSet,
    grid: &StateGrid,
    tl: &Timeline,
) -> Result<BellmanTable> {
    solve_bellman(InformationStructure::Hd, model, scenarios, grid, tl)
}

/// Decision-hazard-decision recursion: slow plans are shared across blocks.
pub fn solve_bellman_dhd(
    model: &SystemModel,
    scenarios: &ScenarioSet,
    grid: &StateGrid,
    tl: &Timeline,
) -> Result<BellmanTable> {
    solve_bellman(InformationStructure::Dhd, model, scenarios, grid, tl)
}

pub fn solve_bellman(
    structure: InformationStructure,
    model: &SystemModel,
    scenarios: &ScenarioSet,
    grid: &StateGrid,
    tl: &Timeline,
) -> Result<BellmanTable> {
    let rows = backward(model, scenarios, grid, tl, |x, blocks, ctg| {
        week_value(structure, x, blocks, ctg, model)
    })?;
    BellmanTable::new(structure, grid.clone(), rows)
}

/// Bellman rows of the three structures on a toy instance, every week
/// problem solved by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub hd: Vec<Vec<f64>>,
    pub dhd: Vec<Vec<f64>>,
    pub wphr: Vec<Vec<f64>>,
}

impl ChainReport {
    /// Largest relative breach of `HD ≤ DHD ≤ WPHR` over all entries;
    /// non-positive when the chain holds.
    pub fn worst_breach(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for ((a, b), c) in self
            .hd
            .iter()
            .flatten()
            .zip(self.dhd.iter().flatten())
            .zip(self.wphr.iter().flatten())
        {
            let scale = a.abs().max(b.abs()).max(c.abs()).max(1.0);
            worst = worst.max((a - b) / scale).max((b - c) / scale);
        }
        worst
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.worst_breach() <= tol
    }

    /// Entries where WPHR is strictly above DHD.
    pub fn strict_wphr_points(&self, tol: f64) -> usize {
        self.dhd
            .iter()
            .flatten()
            .zip(self.wphr.iter().flatten())
            .filter(|(b, c)| **c - **b > tol * b.abs().max(c.abs()).max(1.0))
            .count()
    }
}

/// Reference recursions for the three information structures. Each week's
/// training blocks define the WPHR scenario tree.
pub fn toy_chain(
    model: &SystemModel,
    scenarios: &ScenarioSet,
    grid: &StateGrid,
    tl: &Timeline,
) -> Result<ChainReport> {
    let brute = |structure| {
        backward(model, scenarios, grid, tl, |x, blocks, ctg| {
            brute_force_week(x, blocks, ctg, model, structure)
        })
    };
    let hd = brute(InformationStructure::Hd)?;
    let dhd = brute(InformationStructure::Dhd)?;
    let wphr = backward(model, scenarios, grid, tl, |x, blocks, ctg| {
        let tree = ScenarioTree::from_scenarios(blocks)?;
        wphr_week_toy(x, &tree, ctg, model)
    })?;
    Ok(ChainReport { hd, dhd, wphr })
}

/// Interpolated Bellman value of week `week` at stock `x`.
pub fn eval_bellman(table: &BellmanTable, week: usize, x: f64) -> Result<f64> {
    table.cost_to_go(week)?.eval(x)
}

/// Usage values `−ΔV/Δx` at the grid midpoints of week `week`.
pub fn usage_values(table: &BellmanTable, week: usize) -> Result<Vec<f64>> {
    if week >= table.num_weeks() {
        return Err(Error::OutOfRange(format!(
            "usage values need week < {}, got {week}",
            table.num_weeks()
        )));
    }
    let dx = table.grid.step();
    Ok(table.rows[week]
        .windows(2)
        .map(|v| -(v[1] - v[0]) / dx)
        .collect())
}

/// One grid point of a table comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GapEntry {
    pub week: usize,
    pub grid_index: usize,
    pub x: f64,
    pub hd: f64,
    pub dhd: f64,
}

impl GapEntry {
    pub fn gap(&self) -> f64 {
        self.dhd - self.hd
    }

    fn scale(&self) -> f64 {
        self.hd.abs().max(self.dhd.abs()).max(1.0)
    }

    /// HD above DHD beyond the tolerance.
    pub fn is_violation(&self) -> bool {
        self.hd - self.dhd > ORDERING_TOL * self.scale()
    }

    pub fn is_strict(&self) -> bool {
        self.gap() > STRICT_GAP * self.scale()
    }
}

/// Pointwise `HD ≤ DHD` report.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub entries: Vec<GapEntry>,
}

impl ComparisonReport {
    pub fn violations(&self) -> Vec<&GapEntry> {
        self.entries.iter().filter(|e| e.is_violation()).collect()
    }

    pub fn strict_points(&self) -> usize {
        self.entries.iter().filter(|e| e.is_strict()).count()
    }

    /// Largest `dhd − hd` and where it occurs.
    pub fn max_gap(&self) -> Option<&GapEntry> {
        self.entries
            .iter()
            .fold(None, |best: Option<&GapEntry>, e| match best {
                Some(b) if b.gap() >= e.gap() => Some(b),
                _ => Some(e),
            })
    }

    /// Smallest `dhd − hd`; negative when HD exceeds DHD somewhere.
    pub fn min_gap(&self) -> Option<&GapEntry> {
        self.entries
            .iter()
            .fold(None, |best: Option<&GapEntry>, e| match best {
                Some(b) if b.gap() <= e.gap() => Some(b),
                _ => Some(e),
            })
    }
}

/// Compare an HD and a DHD table built on the same grid and horizon.
pub fn compare_tables(hd: &BellmanTable, dhd: &BellmanTable) -> Result<ComparisonReport> {
    if hd.grid != dhd.grid {
        return Err(Error::MismatchedTables("grids differ".into()));
    }
    if hd.num_weeks() != dhd.num_weeks() {
        return Err(Error::MismatchedTables(format!(
            "{} vs {} weeks",
            hd.num_weeks(),
            dhd.num_weeks()
        )));
    }
    if hd.rows[hd.num_weeks()] != dhd.rows[dhd.num_weeks()] {
        return Err(Error::MismatchedTables("terminal rows differ".into()));
    }
    let entries = hd
        .rows
        .iter()
        .zip(&dhd.rows)
        .enumerate()
        .flat_map(|(week, (a, b))| {
            a.iter().zip(b).zip(&hd.grid.points).enumerate().map(
                move |(grid_index, ((&hd, &dhd), &x))| GapEntry {
                    week,
                    grid_index,
                    x,
                    hd,
                    dhd,
                },
            )
        })
        .collect();
    Ok(ComparisonReport { entries })
}

/// `week,x,value`, weeks `0..=W`.
pub fn write_bellman_csv<W: Write>(out: W, table: &BellmanTable) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["week", "x", "value"])?;
    for (w, row) in table.rows.iter().enumerate() {
        for (&x, &v) in table.grid.points.iter().zip(row) {
            wtr.write_record([w.to_string(), fmt_f64(x), fmt_f64(v)])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_bellman_csv(path: &Path, table: &BellmanTable) -> Result<()> {
    write_bellman_csv(std::fs::File::create(path)?, table)
}

fn schema(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        row,
        column: column.into(),
        message: message.into(),
    }
}

/// Read a table written by [`write_bellman_csv`].
pub fn read_bellman_csv<R: Read>(
    input: R,
    structure: InformationStructure,
) -> Result<BellmanTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != ["week", "x", "value"] {
        return Err(schema(
            0,
            "header",
            format!("expected week,x,value, got {got:?}"),
        ));
    }
    let mut weeks: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        if rec.len() != 3 {
            return Err(schema(
                row,
                "record",
                format!("expected 3 fields, got {}", rec.len()),
            ));
        }
        let week: usize = rec[0]
            .parse()
            .map_err(|e| schema(row, "week", format!("`{}`: {e}", &rec[0])))?;
        let num = |k: usize, col: &str| -> Result<f64> {
            let v: f64 = rec[k]
                .parse()
                .map_err(|e| schema(row, col, format!("`{}`: {e}", &rec[k])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(schema(row, col, "non-finite value"))
            }
        };
        let x = num(1, "x")?;
        let v = num(2, "value")?;
        weeks.entry(week).or_default().push((x, v));
    }
    let n_weeks = weeks.len();
    if n_weeks < 2 || weeks.keys().copied().ne(0..n_weeks) {
        return Err(schema(
            0,
            "week",
            "weeks must be contiguous from 0 and include a terminal row",
        ));
    }
    let xs: Vec<f64> = weeks[&0].iter().map(|p| p.0).collect();
    if xs.len() < 2 {
        return Err(schema(0, "x", "fewer than two grid points"));
    }
    let grid = StateGrid::new(xs[0], xs[xs.len() - 1], xs.len())?;
    let tol = 1e-12 * (grid.x_max - grid.x_min).abs().max(1.0);
    let mut rows = Vec::with_capacity(n_weeks);
    for (w, pts) in weeks {
        if pts.len() != grid.len()
            || pts
                .iter()
                .zip(&grid.points)
                .any(|(p, g)| (p.0 - g).abs() > tol)
        {
            return Err(schema(
                0,
                "x",
                format!("week {w} is not on the regular grid of week 0"),
            ));
        }
        rows.push(pts.into_iter().map(|p| p.1).collect());
    }
    BellmanTable::new(structure, grid, rows)
}

pub fn load_bellman_csv(path: &Path, structure: InformationStructure) -> Result<BellmanTable> {
    read_bellman_csv(std::fs::File::open(path)?, structure)
}

/// `week,x_mid,usage_value_hd,usage_value_dhd` for weeks `0..W`; a missing
/// structure leaves its column empty.
pub fn write_usage_values_csv<W: Write>(
    out: W,
    hd: Option<&BellmanTable>,
    dhd: Option<&BellmanTable>,
) -> Result<()> {
    let reference = hd
        .or(dhd)
        .ok_or_else(|| Error::InvalidModel("no table to export".into()))?;
    if let (Some(a), Some(b)) = (hd, dhd) {
        if a.grid != b.grid || a.num_weeks() != b.num_weeks() {
            return Err(Error::MismatchedTables("grids or horizons differ".into()));
        }
    }
    let mids = reference.grid.midpoints();
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["week", "x_mid", "usage_value_hd", "usage_value_dhd"])?;
    for w in 0..reference.num_weeks() {
        let a = hd.map(|t| usage_values(t, w)).transpose()?;
        let b = dhd.map(|t| usage_values(t, w)).transpose()?;
        for (k, &m) in mids.iter().enumerate() {
            let cell = |s: &Option<Vec<f64>>| s.as_ref().map(|v| fmt_f64(v[k])).unwrap_or_default();
            wtr.write_record([w.to_string(), fmt_f64(m), cell(&a), cell(&b)])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// `week,x,value_hd,value_dhd,gap,violation,strict`.
pub fn write_comparison_csv<W: Write>(out: W, report: &ComparisonReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "week",
        "x",
        "value_hd",
        "value_dhd",
        "gap",
        "violation",
        "strict",
    ])?;
    for e in &report.entries {
        wtr.write_record([
            e.week.to_string(),
            fmt_f64(e.x),
            fmt_f64(e.hd),
            fmt_f64(e.dhd),
            fmt_f64(e.gap()),
            u8::from(e.is_violation()).to_string(),
            u8::from(e.is_strict()).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
