//! Training scenario sets, simulation chronicles, their CSV form, and a
//! seeded generator for synthetic case studies.
//!
//! CSV layout (one row per hour):
//!
//! ```text
//! week,hour,scenario,residual_demand,avail_1,...,avail_I
//! ```
//!
//! `week` and `scenario` are 0-based; `hour` runs over `1..=H`, where hour `k`
//! holds the uncertainty revealed at the end of the week's `k`-th hour.
//! For chronicle files the `scenario` column carries the chronicle id.
//!
//! Blocks of different weeks are treated as independent; nothing here checks it.

use crate::error::{Error, Result};
use crate::system_model::HourlyUncertainty;
use crate::timeline::Timeline;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

/// One week of hourly uncertainties.
pub type WeekBlock = Vec<HourlyUncertainty>;

/// Equiprobable weekly blocks for every week of the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    timeline: Timeline,
    num_units: usize,
    /// `blocks[week][scenario][hour]`
    blocks: Vec<Vec<WeekBlock>>,
}

impl ScenarioSet {
    pub fn new(timeline: Timeline, num_units: usize, blocks: Vec<Vec<WeekBlock>>) -> Result<Self> {
        if blocks.len() != timeline.num_weeks() {
            return Err(Error::LengthMismatch {
                what: "scenario weeks",
                expected: timeline.num_weeks(),
                got: blocks.len(),
            });
        }
        let n = blocks[0].len();
        if n == 0 {
            return Err(Error::InconsistentScenarioCount {
                week: 0,
                expected: 1,
                got: 0,
            });
        }
        for (w, week) in blocks.iter().enumerate() {
            if week.len() != n {
                return Err(Error::InconsistentScenarioCount {
                    week: w,
                    expected: n,
                    got: week.len(),
                });
            }
            for block in week {
                check_block(block, timeline.hours_per_week(), num_units)?;
            }
        }
        Ok(Self {
            timeline,
            num_units,
            blocks,
        })
    }

    pub fn timeline(&self) -> Timeline {
        self.timeline
    }

    pub fn num_units(&self) -> usize {
        self.num_units
    }

    pub fn num_scenarios(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn probability(&self) -> f64 {
        1.0 / self.num_scenarios() as f64
    }

    pub fn week(&self, week: usize) -> &[WeekBlock] {
        &self.blocks[week]
    }

    pub fn block(&self, week: usize, scenario: usize) -> &WeekBlock {
        &self.blocks[week][scenario]
    }

    /// Keep only the first `n` scenarios of every week.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .map(|w| w.iter().take(n).cloned().collect())
            .collect();
        Self::new(self.timeline, self.num_units, blocks)
    }

    /// Scenario `n` read as a full-horizon chronicle.
    pub fn as_chronicle(&self, n: usize) -> Chronicle {
        Chronicle {
            weeks: self.blocks.iter().map(|w| w[n].clone()).collect(),
        }
    }

    /// Single-scenario set built from a chronicle.
    pub fn from_chronicle(
        timeline: Timeline,
        num_units: usize,
        chronicle: &Chronicle,
    ) -> Result<Self> {
        Self::new(
            timeline,
            num_units,
            chronicle.weeks.iter().map(|b| vec![b.clone()]).collect(),
        )
    }
}

/// A full-horizon realisation used for simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Chronicle {
    pub weeks: Vec<WeekBlock>,
}

impl Chronicle {
    pub fn validate(&self, timeline: &Timeline, num_units: usize) -> Result<()> {
        if self.weeks.len() != timeline.num_weeks() {
            return Err(Error::LengthMismatch {
                what: "chronicle weeks",
                expected: timeline.num_weeks(),
                got: self.weeks.len(),
            });
        }
        for block in &self.weeks {
            check_block(block, timeline.hours_per_week(), num_units)?;
        }
        Ok(())
    }
}

fn check_block(block: &[HourlyUncertainty], hours: usize, num_units: usize) -> Result<()> {
    if block.len() != hours {
        return Err(Error::LengthMismatch {
            what: "hours in weekly block",
            expected: hours,
            got: block.len(),
        });
    }
    for unc in block {
        if unc.availability.len() != num_units {
            return Err(Error::LengthMismatch {
                what: "availability columns",
                expected: num_units,
                got: unc.availability.len(),
            });
        }
        if !unc.residual_demand.is_finite() {
            return Err(Error::InvalidModel("non-finite residual demand".into()));
        }
    }
    Ok(())
}

/// Format a float with 17 significant digits, enough to round-trip exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(num_units: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["week", "hour", "scenario", "residual_demand"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((1..=num_units).map(|i| format!("avail_{i}")));
    cols
}

/// Write `blocks[week][id][hour]` in week, id, hour order.
fn write_blocks<W: Write>(out: W, num_units: usize, blocks: &[Vec<WeekBlock>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(header(num_units))?;
    for (w, week) in blocks.iter().enumerate() {
        for (n, block) in week.iter().enumerate() {
            for (h, unc) in block.iter().enumerate() {
                let mut rec = vec![
                    w.to_string(),
                    (h + 1).to_string(),
                    n.to_string(),
                    fmt_f64(unc.residual_demand),
                ];
                rec.extend(unc.availability.iter().map(|&a| u8::from(a).to_string()));
                wtr.write_record(&rec)?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

fn parse_index(raw: &str, row: usize, column: &str) -> Result<usize> {
    raw.trim().parse::<usize>().map_err(|e| Error::Schema {
        row,
        column: column.into(),
        message: format!("expected a non-negative integer, got `{raw}` ({e})"),
    })
}

/// Read rows into `[week][id][hour]`, validating every field.
fn read_blocks<R: Read>(input: R, tl: &Timeline, num_units: usize) -> Result<Vec<Vec<WeekBlock>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let expected = header(num_units);
    let got: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    if got != expected {
        return Err(Error::Schema {
            row: 0,
            column: "header".into(),
            message: format!("expected columns {expected:?}, got {got:?}"),
        });
    }
    let hours = tl.hours_per_week();
    // week -> id -> hour slots
    let mut cells: BTreeMap<usize, BTreeMap<usize, Vec<Option<HourlyUncertainty>>>> =
        BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let week = parse_index(&rec[0], row, "week")?;
        if week >= tl.num_weeks() {
            return Err(Error::Schema {
                row,
                column: "week".into(),
                message: format!("week {week} outside [0, {})", tl.num_weeks()),
            });
        }
        let hour = parse_index(&rec[1], row, "hour")?;
        if hour == 0 || hour > hours {
            return Err(Error::Schema {
                row,
                column: "hour".into(),
                message: format!("hour label {hour} outside [1, {hours}]"),
            });
        }
        let id = parse_index(&rec[2], row, "scenario")?;
        let demand: f64 = rec[3].parse().map_err(|_| Error::Schema {
            row,
            column: "residual_demand".into(),
            message: format!("not a number: `{}`", &rec[3]),
        })?;
        if !demand.is_finite() {
            return Err(Error::Schema {
                row,
                column: "residual_demand".into(),
                message: "residual demand must be finite".into(),
            });
        }
        let mut availability = Vec::with_capacity(num_units);
        for u in 0..num_units {
            let column = format!("avail_{}", u + 1);
            let raw = &rec[4 + u];
            let value: f64 = raw.parse().map_err(|_| Error::Schema {
                row,
                column: column.clone(),
                message: format!("not a number: `{raw}`"),
            })?;
            let bit = if value == 0.0 {
                false
            } else if value == 1.0 {
                true
            } else {
                return Err(Error::Schema {
                    row,
                    column,
                    message: format!("availability must be 0 or 1, got {raw}"),
                });
            };
            availability.push(bit);
        }
        let slots = cells
            .entry(week)
            .or_default()
            .entry(id)
            .or_insert_with(|| vec![None; hours]);
        if slots[hour - 1].is_some() {
            return Err(Error::Schema {
                row,
                column: "hour".into(),
                message: format!("duplicate row for week {week}, scenario {id}, hour {hour}"),
            });
        }
        slots[hour - 1] = Some(HourlyUncertainty::new(demand, availability));
    }

    let mut blocks = Vec::with_capacity(tl.num_weeks());
    let mut count: Option<usize> = None;
    for w in 0..tl.num_weeks() {
        let Some(week) = cells.remove(&w) else {
            return Err(Error::Schema {
                row: 0,
                column: "week".into(),
                message: format!("week {w} is missing"),
            });
        };
        let expected = *count.get_or_insert(week.len());
        if week.len() != expected {
            return Err(Error::InconsistentScenarioCount {
                week: w,
                expected,
                got: week.len(),
            });
        }
        let mut week_blocks = Vec::with_capacity(week.len());
        for (k, (id, slots)) in week.into_iter().enumerate() {
            if id != k {
                return Err(Error::Schema {
                    row: 0,
                    column: "scenario".into(),
                    message: format!(
                        "week {w}: scenario ids must be 0..N, found {id} at position {k}"
                    ),
                });
            }
            let mut block = Vec::with_capacity(hours);
            for (h, slot) in slots.into_iter().enumerate() {
                block.push(slot.ok_or_else(|| Error::Schema {
                    row: 0,
                    column: "hour".into(),
                    message: format!("week {w}, scenario {id} is missing hour {}", h + 1),
                })?);
            }
            week_blocks.push(block);
        }
        blocks.push(week_blocks);
    }
    Ok(blocks)
}

pub fn read_scenarios<R: Read>(input: R, tl: &Timeline, num_units: usize) -> Result<ScenarioSet> {
    let blocks = read_blocks(input, tl, num_units)?;
    ScenarioSet::new(*tl, num_units, blocks)
}

pub fn load_scenarios(path: &Path, tl: &Timeline, num_units: usize) -> Result<ScenarioSet> {
    read_scenarios(std::fs::File::open(path)?, tl, num_units)
}

pub fn write_scenarios<W: Write>(out: W, set: &ScenarioSet) -> Result<()> {
    write_blocks(out, set.num_units, &set.blocks)
}

pub fn save_scenarios(path: &Path, set: &ScenarioSet) -> Result<()> {
    write_scenarios(std::fs::File::create(path)?, set)
}

pub fn read_chronicles<R: Read>(
    input: R,
    tl: &Timeline,
    num_units: usize,
) -> Result<Vec<Chronicle>> {
    let blocks = read_blocks(input, tl, num_units)?;
    let count = blocks[0].len();
    let mut chronicles: Vec<Chronicle> = (0..count)
        .map(|_| Chronicle {
            weeks: Vec::with_capacity(tl.num_weeks()),
        })
        .collect();
    for week in blocks {
        for (c, block) in week.into_iter().enumerate() {
            chronicles[c].weeks.push(block);
        }
    }
    Ok(chronicles)
}

pub fn load_chronicles(path: &Path, tl: &Timeline, num_units: usize) -> Result<Vec<Chronicle>> {
    read_chronicles(std::fs::File::open(path)?, tl, num_units)
}

pub fn write_chronicles<W: Write>(
    out: W,
    num_units: usize,
    chronicles: &[Chronicle],
) -> Result<()> {
    if chronicles.is_empty() {
        return write_blocks(out, num_units, &[]);
    }
    let weeks = chronicles[0].weeks.len();
    if let Some(bad) = chronicles.iter().find(|c| c.weeks.len() != weeks) {
        return Err(Error::LengthMismatch {
            what: "chronicle weeks",
            expected: weeks,
            got: bad.weeks.len(),
        });
    }
    let blocks: Vec<Vec<WeekBlock>> = (0..weeks)
        .map(|w| chronicles.iter().map(|c| c.weeks[w].clone()).collect())
        .collect();
    write_blocks(out, num_units, &blocks)
}

pub fn save_chronicles(path: &Path, num_units: usize, chronicles: &[Chronicle]) -> Result<()> {
    write_chronicles(std::fs::File::create(path)?, num_units, chronicles)
}

/// Parameters of the synthetic case-study generator.
///
/// Demand follows an intra-week sinusoid around a seasonal level plus uniform
/// noise. Each unit independently suffers, with `outage_probability` per block,
/// an outage over a random window of consecutive hours. When outages are
/// enabled, training scenario 0 and chronicle 0 of `forced_outage_week` lose
/// unit `forced_outage_unit` (the base unit) for the first half of the week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub num_weeks: usize,
    pub hours_per_week: usize,
    pub num_scenarios: usize,
    pub num_chronicles: usize,
    pub num_units: usize,
    pub demand_base: f64,
    pub demand_amplitude: f64,
    pub seasonal_amplitude: f64,
    pub demand_noise: f64,
    pub outage_probability: f64,
    pub max_outage_hours: usize,
    pub forced_outage_unit: usize,
    pub forced_outage_week: Option<usize>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_weeks: 10,
            hours_per_week: 6,
            num_scenarios: 5,
            num_chronicles: 3,
            num_units: 3,
            demand_base: 10.0,
            demand_amplitude: 4.0,
            seasonal_amplitude: 2.0,
            demand_noise: 2.0,
            outage_probability: 0.3,
            max_outage_hours: 3,
            forced_outage_unit: 0,
            forced_outage_week: None,
        }
    }
}

impl SynthSpec {
    pub fn timeline(&self) -> Result<Timeline> {
        Timeline::new(self.num_weeks, self.hours_per_week)
    }
}

fn synth_block(rng: &mut ChaCha8Rng, spec: &SynthSpec, week: usize, forced: bool) -> WeekBlock {
    let h_count = spec.hours_per_week;
    let season = spec.seasonal_amplitude
        * (2.0 * std::f64::consts::PI * week as f64 / spec.num_weeks.max(1) as f64).cos();
    let mut block: WeekBlock = (0..h_count)
        .map(|h| {
            let phase = 2.0 * std::f64::consts::PI * (h as f64 + 0.5) / h_count as f64;
            let noise = if spec.demand_noise > 0.0 {
                rng.gen_range(-spec.demand_noise..=spec.demand_noise)
            } else {
                0.0
            };
            let demand = spec.demand_base + season + spec.demand_amplitude * phase.sin() + noise;
            HourlyUncertainty::new(demand, vec![true; spec.num_units])
        })
        .collect();
    if spec.outage_probability > 0.0 {
        for u in 0..spec.num_units {
            if rng.gen_bool(spec.outage_probability.min(1.0)) {
                let len = rng.gen_range(1..=spec.max_outage_hours.clamp(1, h_count));
                let start = rng.gen_range(0..=h_count - len);
                for unc in &mut block[start..start + len] {
                    unc.availability[u] = false;
                }
            }
        }
        if forced && spec.forced_outage_unit < spec.num_units {
            let len = (h_count / 2).max(1);
            for unc in &mut block[..len] {
                unc.availability[spec.forced_outage_unit] = false;
            }
        }
    }
    block
}

/// Deterministic synthetic training set and chronicles for `(seed, spec)`.
pub fn synthesize_case_study(seed: u64, spec: &SynthSpec) -> Result<(ScenarioSet, Vec<Chronicle>)> {
    let tl = spec.timeline()?;
    if spec.num_scenarios == 0 {
        return Err(Error::InvalidModel(
            "synthesis needs at least one scenario".into(),
        ));
    }
    let forced_week = spec.forced_outage_week.unwrap_or(spec.num_weeks / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<Vec<WeekBlock>> = (0..spec.num_weeks)
        .map(|w| {
            (0..spec.num_scenarios)
                .map(|n| synth_block(&mut rng, spec, w, n == 0 && w == forced_week))
                .collect()
        })
        .collect();
    let set = ScenarioSet::new(tl, spec.num_units, blocks)?;
    let chronicles = (0..spec.num_chronicles)
        .map(|c| Chronicle {
            weeks: (0..spec.num_weeks)
                .map(|w| synth_block(&mut rng, spec, w, c == 0 && w == forced_week))
                .collect(),
        })
        .collect();
    Ok((set, chronicles))
}
