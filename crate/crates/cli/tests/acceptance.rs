//! One PASS/FAIL line per acceptance criterion.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use usageval_cli::{load_case, Case};
use usageval_core::instances::{random_instance, InstanceLimits};
use usageval_core::{
    brute_force_week, compare_tables, eval_bellman, simulate_chronicle, solve_bellman_dhd,
    solve_bellman_hd, solve_week_dhd, solve_week_hd, toy_chain, usage_values, BellmanTable,
    DispatchTrace, Error, InformationStructure, ScenarioSet, SpeedClass, StateGrid, SystemModel,
};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn case(name: &str) -> Case {
    load_case(&configs().join(name), None, None).expect("shipped config loads")
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn bellman_ordering() -> Outcome {
    let c = case("desk.json");
    let start = Instant::now();
    let (hd, dhd) = single_thread(|| {
        let hd = solve_bellman_hd(&c.model, &c.scenarios, &c.grid, &c.timeline);
        let dhd = solve_bellman_dhd(&c.model, &c.scenarios, &c.grid, &c.timeline);
        (hd, dhd)
    });
    let elapsed = start.elapsed();
    let report = compare_tables(
        &hd.map_err(|e| e.to_string())?,
        &dhd.map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let violations = report.violations().len();
    let strict = report.strict_points();
    ensure(
        violations == 0 && strict > 0 && elapsed < Duration::from_secs(300),
        format!(
            "{} entries, {violations} violations, {strict} strict points, {:.1}s single-threaded",
            report.entries.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn inequality_chain() -> Outcome {
    let c = case("toy.json");
    let start = Instant::now();
    let chain =
        toy_chain(&c.model, &c.scenarios, &c.grid, &c.timeline).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(
        chain.holds(1e-9) && elapsed < Duration::from_secs(10),
        format!(
            "worst relative breach {:.2e}, {} points with WPHR above DHD, {:.2}s",
            chain.worst_breach(),
            chain.strict_wphr_points(1e-9),
            elapsed.as_secs_f64()
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let limits = InstanceLimits {
        max_units: 2,
        max_hours: 3,
        max_scenarios: 3,
        max_cells: 6,
    };
    let count = 120;
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..count {
        let inst = random_instance(90_000 + seed, limits);
        let run = || -> Result<(f64, f64), Error> {
            let hd_oracle = brute_force_week(
                inst.x,
                &inst.blocks,
                &inst.ctg,
                &inst.model,
                InformationStructure::Hd,
            )?;
            let dhd_oracle = brute_force_week(
                inst.x,
                &inst.blocks,
                &inst.ctg,
                &inst.model,
                InformationStructure::Dhd,
            )?;
            let mut hd = 0.0;
            for b in &inst.blocks {
                hd += solve_week_hd(inst.x, b, &inst.ctg, &inst.model)?.value;
            }
            hd /= inst.blocks.len() as f64;
            let dhd = solve_week_dhd(inst.x, &inst.blocks, &inst.ctg, &inst.model)?.value;
            Ok((rel(hd, hd_oracle), rel(dhd, dhd_oracle)))
        };
        let (a, b) = run().map_err(|e| format!("instance {seed}: {e}"))?;
        worst = (worst.0.max(a), worst.1.max(b));
    }
    ensure(
        worst.0 <= 1e-6 && worst.1 <= 1e-6,
        format!(
            "{count} instances, worst deviation hd {:.2e}, dhd {:.2e}",
            worst.0, worst.1
        ),
    )
}

fn table_distance(a: &BellmanTable, b: &BellmanTable) -> f64 {
    a.rows()
        .iter()
        .flatten()
        .zip(b.rows().iter().flatten())
        .map(|(x, y)| rel(*x, *y))
        .fold(0.0, f64::max)
}

fn structure_reductions() -> Outcome {
    let c = case("desk.json");
    let pair = |model: &SystemModel, set: &ScenarioSet| -> Result<f64, Error> {
        let hd = solve_bellman_hd(model, set, &c.grid, &c.timeline)?;
        let dhd = solve_bellman_dhd(model, set, &c.grid, &c.timeline)?;
        Ok(table_distance(&hd, &dhd))
    };
    let one = c.scenarios.truncated(1).map_err(|e| e.to_string())?;
    let single = pair(&c.model, &one).map_err(|e| e.to_string())?;
    let all_fast = c.model.with_all_units(SpeedClass::Fast);
    let no_slow = pair(&all_fast, &c.scenarios).map_err(|e| e.to_string())?;
    ensure(
        single <= 1e-12 && no_slow <= 1e-12,
        format!("max relative difference N=1 {single:.2e}, no slow units {no_slow:.2e}"),
    )
}

fn pump_turb_volume(t: &DispatchTrace) -> f64 {
    t.weeks
        .iter()
        .flat_map(|w| &w.controls)
        .map(|h| h.pump + h.turb)
        .sum()
}

fn merit_order_flip() -> Outcome {
    let c = case("desk.json");
    let err = |e: Error| e.to_string();
    let hd = solve_bellman_hd(&c.model, &c.scenarios, &c.grid, &c.timeline).map_err(err)?;
    let dhd = solve_bellman_dhd(&c.model, &c.scenarios, &c.grid, &c.timeline).map_err(err)?;
    let price = c
        .model
        .units
        .iter()
        .find(|u| u.name == "semi_base")
        .ok_or("desk case has no semi_base unit")?
        .variable_cost;
    let mut flips = 0;
    for w in 1..c.timeline.num_weeks() {
        let a = usage_values(&hd, w).map_err(err)?;
        let b = usage_values(&dhd, w).map_err(err)?;
        flips += a
            .iter()
            .zip(&b)
            .filter(|(h, d)| **h > price && price > **d)
            .count();
    }
    let chronicles = c.chronicles.as_ref().ok_or("desk case has no chronicles")?;
    let mut differing_hours = 0;
    let mut dhd_higher = 0;
    for ch in chronicles {
        let th = simulate_chronicle(&c.model, &hd, &c.scenarios, ch, c.x0()).map_err(err)?;
        let td = simulate_chronicle(&c.model, &dhd, &c.scenarios, ch, c.x0()).map_err(err)?;
        differing_hours += th
            .weeks
            .iter()
            .flat_map(|w| &w.controls)
            .zip(td.weeks.iter().flat_map(|w| &w.controls))
            .filter(|(a, b)| a != b)
            .count();
        if pump_turb_volume(&td) > pump_turb_volume(&th) {
            dhd_higher += 1;
        }
    }
    ensure(
        flips > 0 && differing_hours > 0 && dhd_higher > 0,
        format!(
            "{flips} usage values with HD > {price} > DHD, {differing_hours} hours dispatched differently, \
             DHD storage volume higher on {dhd_higher}/{} chronicles",
            chronicles.len()
        ),
    )
}

fn simulation_gap(
    model: &SystemModel,
    set: &ScenarioSet,
    grid: &StateGrid,
    x0: f64,
) -> Result<f64, Error> {
    let tl = set.timeline();
    let table = solve_bellman_dhd(model, set, grid, &tl)?;
    let trace = simulate_chronicle(model, &table, set, &set.as_chronicle(0), x0)?;
    Ok((trace.total_cost() - eval_bellman(&table, 0, x0)?).abs())
}

fn deterministic_consistency() -> Outcome {
    let c = case("desk.json");
    let err = |e: Error| e.to_string();
    let one = c.scenarios.truncated(1).map_err(err)?;
    let x0 = c.x0();
    let coarse = StateGrid::for_storage(&c.model.storage, 11).map_err(err)?;
    let grids = [coarse.clone(), coarse.refined(), coarse.refined().refined()];
    let mut gaps = Vec::new();
    for g in &grids {
        gaps.push(simulation_gap(&c.model, &one, g, x0).map_err(err)?);
    }
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);

    let mut frozen = c.model.clone();
    frozen.storage.pump_max = 0.0;
    frozen.storage.turb_max = 0.0;
    let on_grid = simulation_gap(&frozen, &one, &grids[1], x0).map_err(err)?;
    let scale = eval_bellman(
        &solve_bellman_dhd(&frozen, &one, &grids[1], &c.timeline).map_err(err)?,
        0,
        x0,
    )
    .map_err(err)?
    .abs()
    .max(1.0);
    ensure(
        shrinking && on_grid <= 1e-9 * scale,
        format!(
            "gap {:.3} -> {:.3} -> {:.3} over {}/{}/{} points, {on_grid:.1e} with only grid states",
            gaps[0],
            gaps[1],
            gaps[2],
            grids[0].len(),
            grids[1].len(),
            grids[2].len()
        ),
    )
}

fn run_pipeline(out: &Path, threads: &str) -> Result<(), String> {
    let config = configs().join("desk.json");
    for cmd in ["solve", "simulate"] {
        let status = Command::new(env!("CARGO_BIN_EXE_usageval"))
            .args([
                cmd,
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--threads",
                threads,
            ])
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if !status.success() {
            return Err(format!("{cmd} with {threads} threads exited with {status}"));
        }
    }
    Ok(())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("t1"), dir.path().join("t4"));
    run_pipeline(&a, "1")?;
    run_pipeline(&b, "4")?;
    let mut names: Vec<String> = fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| fs::read(a.join(n)).ok() != fs::read(b.join(n)).ok())
        .collect();
    ensure(
        differing.is_empty() && !names.is_empty(),
        format!(
            "{} CSV files compared, {} differ {:?}",
            names.len(),
            differing.len(),
            differing
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 7] = [
        ("Bellman ordering on the desk case", bellman_ordering),
        ("HD <= DHD <= WPHR on the toy case", inequality_chain),
        ("branch and bound matches brute force", oracle_equivalence),
        ("N=1 and no-slow-unit reductions", structure_reductions),
        ("merit-order flip and storage use", merit_order_flip),
        (
            "deterministic simulation consistency",
            deterministic_consistency,
        ),
        ("byte-identical outputs across thread counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
