//! Random small week instances for cross-checking the solvers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::intraweek::CostToGo;
use crate::pwl::PiecewiseLinear;
use crate::system_model::{HourlyUncertainty, SpeedClass, Storage, SystemModel, ThermalUnit};

/// Size limits for [`random_instance`].
#[derive(Debug, Clone, Copy)]
pub struct InstanceLimits {
    pub max_units: usize,
    pub max_hours: usize,
    pub max_scenarios: usize,
    /// Upper bound on `units × hours`.
    pub max_cells: usize,
}

impl Default for InstanceLimits {
    fn default() -> Self {
        Self {
            max_units: 3,
            max_hours: 4,
            max_scenarios: 3,
            max_cells: 8,
        }
    }
}

/// A model, a set of equally likely blocks, a cost-to-go and a start stock.
#[derive(Debug, Clone)]
pub struct WeekInstance {
    pub model: SystemModel,
    pub blocks: Vec<Vec<HourlyUncertainty>>,
    pub ctg: CostToGo,
    pub x: f64,
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Deterministic random instance for `seed`.
pub fn random_instance(seed: u64, limits: InstanceLimits) -> WeekInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_units = rng.gen_range(1..=limits.max_units);
    let max_hours = (limits.max_cells / num_units).clamp(1, limits.max_hours);
    let hours = rng.gen_range(1..=max_hours);
    let scenarios = rng.gen_range(1..=limits.max_scenarios);

    let units: Vec<ThermalUnit> = (0..num_units)
        .map(|i| {
            let p_min = round2(rng.gen_range(0.0..3.0));
            ThermalUnit {
                name: format!("g{i}"),
                p_min,
                p_max: round2(p_min + rng.gen_range(0.5..5.0)),
                startup_cost: round2(rng.gen_range(0.0..30.0)),
                variable_cost: round2(rng.gen_range(5.0..50.0)),
                speed_class: if rng.gen_bool(0.5) {
                    SpeedClass::Slow
                } else {
                    SpeedClass::Fast
                },
            }
        })
        .collect();
    let x_max = round2(rng.gen_range(2.0..10.0));
    let storage = Storage {
        x_min: 0.0,
        x_max,
        pump_max: if rng.gen_bool(0.2) {
            0.0
        } else {
            round2(rng.gen_range(0.5..4.0))
        },
        turb_max: if rng.gen_bool(0.2) {
            0.0
        } else {
            round2(rng.gen_range(0.5..4.0))
        },
        eta: round2(rng.gen_range(0.5..1.0)),
    };

    let n_pts = rng.gen_range(2..=5);
    let mut xs: Vec<f64> = (0..n_pts)
        .map(|k| x_max * k as f64 / (n_pts - 1) as f64)
        .collect();
    xs[n_pts - 1] = x_max;
    let mut level = round2(rng.gen_range(0.0..100.0));
    let ys: Vec<f64> = xs
        .iter()
        .map(|_| {
            let y = level;
            level -= round2(rng.gen_range(-20.0..150.0));
            y
        })
        .collect();
    let ctg = PiecewiseLinear::new(xs, ys).expect("valid breakpoints");

    let blocks = (0..scenarios)
        .map(|_| {
            (0..hours)
                .map(|_| {
                    HourlyUncertainty::new(
                        round2(rng.gen_range(0.0..12.0)),
                        (0..num_units).map(|_| rng.gen_bool(0.8)).collect(),
                    )
                })
                .collect()
        })
        .collect();
    let x = round2(rng.gen_range(0.0..x_max));
    let ens_penalty = SystemModel::default_ens_penalty(&units);
    let model = SystemModel::new(storage, units, ens_penalty, ctg.clone(), x).expect("valid model");
    WeekInstance {
        model,
        blocks,
        ctg,
        x,
    }
}
