#![allow(dead_code)]

use usageval_core::*;

pub fn unit(p_min: f64, p_max: f64, cs: f64, cv: f64, class: SpeedClass) -> ThermalUnit {
    ThermalUnit {
        name: String::new(),
        p_min,
        p_max,
        startup_cost: cs,
        variable_cost: cv,
        speed_class: class,
    }
}

pub fn storage(x_max: f64, pump: f64, turb: f64, eta: f64) -> Storage {
    Storage {
        x_min: 0.0,
        x_max,
        pump_max: pump,
        turb_max: turb,
        eta,
    }
}

pub fn model(storage: Storage, units: Vec<ThermalUnit>, price: f64) -> SystemModel {
    let k = SystemModel::linear_final_cost(&storage, price).unwrap();
    let pen = SystemModel::default_ens_penalty(&units);
    let x0 = 0.5 * (storage.x_min + storage.x_max);
    SystemModel::new(storage, units, pen, k, x0).unwrap()
}

/// Four weeks of three hours, three scenarios, one slow and one fast unit.
pub fn small_case(seed: u64) -> (SystemModel, ScenarioSet, Vec<Chronicle>) {
    let m = model(
        storage(8.0, 2.0, 3.0, 0.8),
        vec![
            unit(4.0, 9.0, 40.0, 10.0, SpeedClass::Slow),
            unit(0.5, 6.0, 4.0, 60.0, SpeedClass::Fast),
        ],
        30.0,
    );
    let spec = SynthSpec {
        num_weeks: 4,
        hours_per_week: 3,
        num_scenarios: 3,
        num_chronicles: 2,
        num_units: 2,
        ..SynthSpec::default()
    };
    let (set, chronicles) = synthesize_case_study(seed, &spec).unwrap();
    (m, set, chronicles)
}

pub fn zero_block(hours: usize, units: usize) -> WeekBlock {
    vec![HourlyUncertainty::new(0.0, vec![true; units]); hours]
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
