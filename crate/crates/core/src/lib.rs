//! Weekly storage usage values from a stochastic dynamic program whose
//! stages are full unit-commitment weeks.

pub mod error;
pub mod instances;
pub mod intraweek;
pub mod policy_sim;
pub mod pwl;
pub mod scenario_io;
pub mod sdp_engine;
pub mod system_model;
pub mod timeline;

pub use error::{Error, Result};
pub use intraweek::{
    brute_force_week, evaluate_recourse, solve_week_dhd, solve_week_hd, wphr_week_toy, CostToGo,
    DhdWeekSolution, InformationStructure, ScenarioTree, SlowPlan, TreeNode, WeekSolution,
};
pub use policy_sim::{
    aggregate_kpis, simulate_chronicle, DispatchTrace, KpiSummary, WeekKpi, WeekRecord,
};
pub use pwl::PiecewiseLinear;
pub use scenario_io::{synthesize_case_study, Chronicle, ScenarioSet, SynthSpec, WeekBlock};
pub use sdp_engine::{
    compare_tables, eval_bellman, solve_bellman, solve_bellman_dhd, solve_bellman_hd, toy_chain,
    usage_values, BellmanTable, ChainReport, ComparisonReport, GapEntry, StateGrid,
};
pub use system_model::{
    HourlyControl, HourlyUncertainty, SpeedClass, Storage, SystemModel, ThermalUnit,
};
pub use timeline::{TimeIndex, Timeline};
