//! Fixtures shared by the benchmarks.

use usageval_core::{
    synthesize_case_study, Chronicle, PiecewiseLinear, ScenarioSet, SpeedClass, StateGrid, Storage,
    SynthSpec, SystemModel, ThermalUnit,
};

fn unit(name: &str, p_min: f64, p_max: f64, cs: f64, cv: f64, class: SpeedClass) -> ThermalUnit {
    ThermalUnit {
        name: name.into(),
        p_min,
        p_max,
        startup_cost: cs,
        variable_cost: cv,
        speed_class: class,
    }
}

/// The shipped desk case: two slow units, one peaker, a 20 MWh store.
pub fn desk_model() -> SystemModel {
    let storage = Storage {
        x_min: 0.0,
        x_max: 20.0,
        pump_max: 3.0,
        turb_max: 4.0,
        eta: 0.8,
    };
    let units = vec![
        unit("base", 4.0, 8.0, 50.0, 10.0, SpeedClass::Slow),
        unit("semi_base", 2.0, 5.0, 30.0, 30.0, SpeedClass::Slow),
        unit("peak", 0.1, 6.0, 5.0, 80.0, SpeedClass::Fast),
    ];
    let k: PiecewiseLinear = SystemModel::linear_final_cost(&storage, 40.0).expect("valid range");
    SystemModel::new(storage, units, 800.0, k, 10.0).expect("valid desk model")
}

pub fn desk_scenarios() -> (ScenarioSet, Vec<Chronicle>) {
    synthesize_case_study(3, &SynthSpec::default()).expect("default spec is valid")
}

pub fn desk_grid(points: usize) -> StateGrid {
    StateGrid::for_storage(&desk_model().storage, points).expect("at least two points")
}
