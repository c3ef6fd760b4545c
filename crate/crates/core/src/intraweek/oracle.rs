//! Exhaustive reference solver for small instances.
//!
//! Every commitment matrix is enumerated. For each one the continuous
//! dispatch is solved as a linear program per affine piece of the
//! cost-to-go, with the final stock confined to that piece.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::{mean, CostToGo, InformationStructure};
use crate::error::{Error, Result};
use crate::system_model::{HourlyUncertainty, SystemModel};

/// Largest number of commitment matrices the oracle will enumerate.
pub const ORACLE_MAX_COMBINATIONS: u64 = 1 << 16;

/// Optimal expected week value by exhaustive enumeration.
///
/// With [`InformationStructure::Hd`] each block is optimised separately;
/// with [`InformationStructure::Dhd`] the slow units share one plan.
pub fn brute_force_week(
    x: f64,
    blocks: &[Vec<HourlyUncertainty>],
    ctg: &CostToGo,
    model: &SystemModel,
    structure: InformationStructure,
) -> Result<f64> {
    let hours = blocks
        .first()
        .ok_or_else(|| Error::InvalidModel("no scenario blocks".into()))?
        .len();
    let cells = model.num_units() * hours;
    if cells as u32 >= 64 || (1u64 << cells) > ORACLE_MAX_COMBINATIONS {
        return Err(Error::GuardExceeded(format!(
            "{} units x {hours} hours exceeds {ORACLE_MAX_COMBINATIONS} commitment matrices",
            model.num_units()
        )));
    }
    for b in blocks {
        super::check_inputs(x, b, ctg, model)?;
        if b.len() != hours {
            return Err(Error::LengthMismatch {
                what: "scenario block hours",
                expected: hours,
                got: b.len(),
            });
        }
    }
    let x = x.clamp(model.storage.x_min, model.storage.x_max);
    let tables = blocks
        .iter()
        .map(|b| matrix_values(x, b, ctg, model))
        .collect::<Result<Vec<_>>>()?;

    match structure {
        InformationStructure::Hd => {
            let per: Vec<f64> = tables
                .iter()
                .map(|t| t.iter().copied().fold(f64::INFINITY, f64::min))
                .collect();
            Ok(mean(&per))
        }
        InformationStructure::Dhd => {
            let slow_mask = unit_mask(&model.slow_units(), hours);
            let fast_mask = unit_mask(&model.fast_units(), hours);
            let mut best = f64::INFINITY;
            for plan in submasks(slow_mask) {
                let per: Vec<f64> = tables
                    .iter()
                    .map(|t| {
                        submasks(fast_mask)
                            .map(|f| t[(plan | f) as usize])
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect();
                best = best.min(mean(&per));
            }
            Ok(best)
        }
    }
}

fn unit_mask(units: &[usize], hours: usize) -> u64 {
    units
        .iter()
        .flat_map(|&i| (0..hours).map(move |h| 1u64 << (i * hours + h)))
        .fold(0, |a, b| a | b)
}

/// All subsets of `mask`, including the empty one.
fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask {
            None
        } else {
            Some(((cur | !mask).wrapping_add(1)) & mask)
        };
        Some(cur)
    })
}

/// Week value of every commitment matrix, indexed by bitmask
/// (bit `unit * H + hour`).
fn matrix_values(
    x: f64,
    block: &[HourlyUncertainty],
    ctg: &CostToGo,
    model: &SystemModel,
) -> Result<Vec<f64>> {
    let hours = block.len();
    let cells = model.num_units() * hours;
    (0..1u64 << cells)
        .map(|m| {
            let on = |i: usize, h: usize| m >> (i * hours + h) & 1 == 1;
            let mut startups = 0.0;
            for (i, unit) in model.units.iter().enumerate() {
                for h in 0..hours {
                    if on(i, h) && (h == 0 || !on(i, h - 1)) {
                        startups += unit.startup_cost;
                    }
                }
            }
            let mut best = f64::INFINITY;
            for k in 0..ctg.num_segments() {
                if let Some(v) = dispatch_lp(x, block, &on, model, ctg, k)? {
                    best = best.min(v);
                }
            }
            Ok(startups + best)
        })
        .collect()
}

/// Continuous dispatch with the final stock restricted to cost-to-go piece `k`.
fn dispatch_lp(
    x: f64,
    block: &[HourlyUncertainty],
    on: &dyn Fn(usize, usize) -> bool,
    model: &SystemModel,
    ctg: &CostToGo,
    k: usize,
) -> Result<Option<f64>> {
    let s = &model.storage;
    let lo = ctg.breakpoints()[k];
    let hi = ctg.breakpoints()[k + 1];
    let slope = ctg.slope(k);
    let constant = ctg.values()[k] + slope * (x - lo);

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut cumulative = Vec::new();
    for (h, unc) in block.iter().enumerate() {
        let pump = lp.add_var(slope * s.eta, (0.0, s.pump_max));
        let turb = lp.add_var(-slope, (0.0, s.turb_max));
        let ens = lp.add_var(model.ens_penalty, (0.0, f64::INFINITY));
        let mut balance = vec![(turb, 1.0), (ens, 1.0), (pump, -1.0)];
        for (i, unit) in model.units.iter().enumerate() {
            if on(i, h) && unc.availability[i] {
                let p = lp.add_var(unit.variable_cost, (unit.p_min, unit.p_max));
                balance.push((p, 1.0));
            }
        }
        lp.add_constraint(balance.as_slice(), ComparisonOp::Ge, unc.residual_demand);
        cumulative.push((pump, s.eta));
        cumulative.push((turb, -1.0));
        lp.add_constraint(cumulative.as_slice(), ComparisonOp::Le, s.x_max - x);
        lp.add_constraint(cumulative.as_slice(), ComparisonOp::Ge, s.x_min - x);
    }
    lp.add_constraint(cumulative.as_slice(), ComparisonOp::Le, hi - x);
    lp.add_constraint(cumulative.as_slice(), ComparisonOp::Ge, lo - x);

    match lp.solve() {
        Ok(outcome) => {
            let sol = outcome
                .into_solution()
                .map_err(|_| Error::solver("reference LP interrupted"))?;
            Ok(Some(constant + sol.objective()))
        }
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => Err(Error::solver(format!("reference LP: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submasks_enumerates_all_subsets() {
        let mut v: Vec<u64> = submasks(0b1010).collect();
        v.sort();
        assert_eq!(v, vec![0b0000, 0b0010, 0b1000, 0b1010]);
        assert_eq!(submasks(0).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn unit_mask_is_unit_major() {
        assert_eq!(unit_mask(&[1], 3), 0b111000);
        assert_eq!(unit_mask(&[0, 2], 2), 0b110011);
    }
}
