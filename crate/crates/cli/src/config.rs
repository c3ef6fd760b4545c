//! JSON run configuration and the case it describes.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use usageval_core::scenario_io::{load_chronicles, load_scenarios};
use usageval_core::{
    Chronicle, InformationStructure, PiecewiseLinear, ScenarioSet, StateGrid, Storage, SynthSpec,
    SystemModel, ThermalUnit, Timeline,
};

use crate::failure::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineSpec {
    pub num_weeks: usize,
    pub hours_per_week: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FinalCostSpec {
    /// `K(x) = −price·x`.
    Price(f64),
    Points(PiecewiseLinear),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub storage: Storage,
    pub units: Vec<ThermalUnit>,
    pub ens_penalty: Option<f64>,
    pub final_cost: FinalCostSpec,
    /// Defaults to the middle of the storage range.
    pub initial_stock: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    /// Each refinement halves the step.
    pub refinements: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 21,
            refinements: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// CSV file, relative to the config file.
    File(PathBuf),
    /// Generated; weeks, hours and units come from the timeline and model.
    Synthetic(SynthSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StructureSelection {
    Hd,
    Dhd,
    Both,
}

impl StructureSelection {
    pub fn structures(self) -> Vec<InformationStructure> {
        match self {
            StructureSelection::Hd => vec![InformationStructure::Hd],
            StructureSelection::Dhd => vec![InformationStructure::Dhd],
            StructureSelection::Both => vec![InformationStructure::Hd, InformationStructure::Dhd],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StructureSelection::Hd => "hd",
            StructureSelection::Dhd => "dhd",
            StructureSelection::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    /// Random instances per structure in the oracle campaign.
    pub instances: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self { instances: 100 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub timeline: TimelineSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub grid: GridSpec,
    pub scenarios: SourceSpec,
    /// Defaults to the chronicles produced with synthetic scenarios.
    #[serde(default)]
    pub chronicles: Option<SourceSpec>,
    /// Relative to the config file; `--out` takes precedence.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_structure")]
    pub structure: StructureSelection,
    #[serde(default)]
    pub toy_wphr: bool,
    #[serde(default)]
    pub verify: VerifySpec,
}

fn default_structure() -> StructureSelection {
    StructureSelection::Both
}

/// Everything a command needs, validated.
pub struct Case {
    pub config: RunConfig,
    /// Directory holding the config file.
    pub base_dir: PathBuf,
    pub config_sha256: String,
    pub timeline: Timeline,
    pub model: SystemModel,
    pub grid: StateGrid,
    pub scenarios: ScenarioSet,
    pub chronicles: Option<Vec<Chronicle>>,
    pub seed: u64,
    pub structure: StructureSelection,
}

impl Case {
    pub fn x0(&self) -> f64 {
        self.model.initial_stock
    }

    /// `override_dir`, else the configured directory, else `out`.
    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        match (override_dir, &self.config.output_dir) {
            (Some(d), _) => d.to_path_buf(),
            (None, Some(d)) => self.base_dir.join(d),
            (None, None) => PathBuf::from("out"),
        }
    }

    pub fn synth_spec(&self) -> SynthSpec {
        let spec = match &self.config.scenarios {
            SourceSpec::Synthetic(s) => s.clone(),
            SourceSpec::File(_) => SynthSpec::default(),
        };
        fill_spec(spec, &self.timeline, self.model.num_units())
    }
}

fn fill_spec(mut spec: SynthSpec, tl: &Timeline, num_units: usize) -> SynthSpec {
    spec.num_weeks = tl.num_weeks();
    spec.hours_per_week = tl.hours_per_week();
    spec.num_units = num_units;
    spec
}

fn parse(text: &str) -> Result<RunConfig, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Failure::Validation(format!("config field `{path}`: {}", e.inner()))
    })
}

fn build_model(spec: &ModelSpec) -> Result<SystemModel, Failure> {
    let field = |name: &str, e: usageval_core::Error| {
        Failure::Validation(format!("config field `model.{name}`: {e}"))
    };
    spec.storage.validate().map_err(|e| field("storage", e))?;
    for (i, u) in spec.units.iter().enumerate() {
        u.validate().map_err(|e| field(&format!("units[{i}]"), e))?;
    }
    if spec.units.is_empty() {
        return Err(Failure::Validation(
            "config field `model.units`: at least one unit is required".into(),
        ));
    }
    let final_cost = match &spec.final_cost {
        FinalCostSpec::Price(p) => {
            SystemModel::linear_final_cost(&spec.storage, *p).map_err(|e| field("final_cost", e))?
        }
        FinalCostSpec::Points(f) => f.clone(),
    };
    let s = &spec.storage;
    let x0 = spec.initial_stock.unwrap_or(0.5 * (s.x_min + s.x_max));
    let ens = spec
        .ens_penalty
        .unwrap_or_else(|| SystemModel::default_ens_penalty(&spec.units));
    SystemModel::new(*s, spec.units.clone(), ens, final_cost, x0).map_err(|e| field("*", e))
}

/// Read, validate and materialise a config file.
pub fn load_case(
    path: &Path,
    seed: Option<u64>,
    structure: Option<StructureSelection>,
) -> Result<Case, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let config = parse(&text)?;
    let config_sha256 = format!("{:x}", Sha256::digest(text.as_bytes()));
    let base = path.parent().unwrap_or(Path::new("."));
    let seed = seed.unwrap_or(config.seed);
    let structure = structure.unwrap_or(config.structure);

    let timeline = Timeline::new(config.timeline.num_weeks, config.timeline.hours_per_week)
        .map_err(|e| Failure::Validation(format!("config field `timeline`: {e}")))?;
    let model = build_model(&config.model)?;
    if config.grid.points < 2 {
        return Err(Failure::Validation(
            "config field `grid.points`: at least 2 points are required".into(),
        ));
    }
    let mut grid = StateGrid::for_storage(&model.storage, config.grid.points)
        .map_err(|e| Failure::Validation(format!("config field `grid`: {e}")))?;
    for _ in 0..config.grid.refinements {
        grid = grid.refined();
    }
    let n = model.num_units();

    let mut synthesized: Option<Vec<Chronicle>> = None;
    let scenarios = match &config.scenarios {
        SourceSpec::File(p) => {
            let full = base.join(p);
            if !full.exists() {
                return Err(Failure::Validation(format!(
                    "config field `scenarios.file`: {} does not exist",
                    full.display()
                )));
            }
            load_scenarios(&full, &timeline, n)
                .map_err(|e| Failure::Validation(format!("{}: {e}", full.display())))?
        }
        SourceSpec::Synthetic(spec) => {
            let spec = fill_spec(spec.clone(), &timeline, n);
            let (set, chron) = usageval_core::synthesize_case_study(seed, &spec).map_err(|e| {
                Failure::Validation(format!("config field `scenarios.synthetic`: {e}"))
            })?;
            synthesized = Some(chron);
            set
        }
    };
    let chronicles = match &config.chronicles {
        None => synthesized,
        Some(SourceSpec::File(p)) => {
            let full = base.join(p);
            if !full.exists() {
                return Err(Failure::Validation(format!(
                    "config field `chronicles.file`: {} does not exist",
                    full.display()
                )));
            }
            Some(
                load_chronicles(&full, &timeline, n)
                    .map_err(|e| Failure::Validation(format!("{}: {e}", full.display())))?,
            )
        }
        Some(SourceSpec::Synthetic(spec)) => {
            let spec = fill_spec(spec.clone(), &timeline, n);
            let (_, chron) = usageval_core::synthesize_case_study(seed, &spec).map_err(|e| {
                Failure::Validation(format!("config field `chronicles.synthetic`: {e}"))
            })?;
            Some(chron)
        }
    };
    if config.toy_wphr {
        use usageval_core::intraweek::{WPHR_MAX_BRANCHING, WPHR_MAX_HOURS, WPHR_MAX_UNITS};
        if timeline.hours_per_week() > WPHR_MAX_HOURS
            || n > WPHR_MAX_UNITS
            || scenarios.num_scenarios() > WPHR_MAX_BRANCHING
        {
            return Err(Failure::Validation(format!(
                "config field `toy_wphr`: needs at most {WPHR_MAX_HOURS} hours, {WPHR_MAX_UNITS} units and {WPHR_MAX_BRANCHING} scenarios"
            )));
        }
    }
    Ok(Case {
        base_dir: base.to_path_buf(),
        config,
        config_sha256,
        timeline,
        model,
        grid,
        scenarios,
        chronicles,
        seed,
        structure,
    })
}
