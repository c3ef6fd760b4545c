use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use usageval_core::instances::{random_instance, InstanceLimits};
use usageval_core::policy_sim::{write_kpi_csv, write_trace_csv};
use usageval_core::scenario_io::{save_chronicles, save_scenarios};
use usageval_core::sdp_engine::{
    load_bellman_csv, write_bellman_csv, write_comparison_csv, write_usage_values_csv,
};
use usageval_core::{
    aggregate_kpis, brute_force_week, compare_tables, simulate_chronicle, solve_bellman,
    solve_week_dhd, solve_week_hd, synthesize_case_study, toy_chain, BellmanTable, DispatchTrace,
    InformationStructure,
};

use crate::config::Case;
use crate::failure::Failure;

const CHAIN_TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-6;

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))
}

fn table_path(out: &Path, s: InformationStructure) -> PathBuf {
    out.join(format!("bellman_{}.csv", s.as_str()))
}

/// Record what produced the files in `out`.
pub fn write_manifest(
    out: &Path,
    case: &Case,
    command: &str,
    files: &[String],
) -> Result<(), Failure> {
    let manifest = json!({
        "tool": "usageval",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_sha256": case.config_sha256,
        "seed": case.seed,
        "structure": case.structure.as_str(),
        "files": files,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("serialisable manifest");
    std::fs::write(out.join("manifest.json"), text + "\n")?;
    Ok(())
}

pub fn solve(case: &Case, out: &Path) -> Result<Vec<String>, Failure> {
    let mut files = Vec::new();
    let mut tables = Vec::new();
    for s in case.structure.structures() {
        let table = solve_bellman(s, &case.model, &case.scenarios, &case.grid, &case.timeline)?;
        let path = table_path(out, s);
        write_bellman_csv(create(&path)?, &table)?;
        println!(
            "{}: {} weeks x {} grid points, V0(x0) = {:.6}",
            s.as_str(),
            table.num_weeks(),
            table.grid().len(),
            usageval_core::eval_bellman(&table, 0, case.x0())?
        );
        files.push(format!("bellman_{}.csv", s.as_str()));
        tables.push(table);
    }
    let hd = tables
        .iter()
        .find(|t| t.structure() == InformationStructure::Hd);
    let dhd = tables
        .iter()
        .find(|t| t.structure() == InformationStructure::Dhd);
    write_usage_values_csv(create(&out.join("usage_values.csv"))?, hd, dhd)?;
    files.push("usage_values.csv".into());
    if let (Some(hd), Some(dhd)) = (hd, dhd) {
        let report = compare_tables(hd, dhd)?;
        write_comparison_csv(create(&out.join("comparison.csv"))?, &report)?;
        files.push("comparison.csv".into());
        let violations = report.violations();
        if let Some(g) = report.max_gap() {
            println!(
                "comparison: max gap {:.6e} at week {} x = {}, {} strict points, {} violations",
                g.gap(),
                g.week,
                g.x,
                report.strict_points(),
                violations.len()
            );
        }
        if let Some(v) = violations.first() {
            return Err(Failure::Violation(format!(
                "HD value above DHD value at week {} x = {} ({} > {}), {} violations in total",
                v.week,
                v.x,
                v.hd,
                v.dhd,
                violations.len()
            )));
        }
    }
    Ok(files)
}

fn obtain_table(case: &Case, out: &Path, s: InformationStructure) -> Result<BellmanTable, Failure> {
    let path = table_path(out, s);
    if path.exists() {
        let table = load_bellman_csv(&path, s)
            .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        if table.grid() != &case.grid || table.num_weeks() != case.timeline.num_weeks() {
            return Err(Failure::Validation(format!(
                "{} does not match the configured grid and horizon",
                path.display()
            )));
        }
        Ok(table)
    } else {
        Ok(solve_bellman(
            s,
            &case.model,
            &case.scenarios,
            &case.grid,
            &case.timeline,
        )?)
    }
}

pub fn simulate(case: &Case, out: &Path) -> Result<Vec<String>, Failure> {
    let chronicles = case
        .chronicles
        .as_ref()
        .ok_or_else(|| Failure::Validation("config has no chronicles to simulate".into()))?;
    let n = case.model.num_units();
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    for s in case.structure.structures() {
        let table = obtain_table(case, out, s)?;
        let traces: Vec<DispatchTrace> = chronicles
            .par_iter()
            .enumerate()
            .map(|(c, ch)| {
                simulate_chronicle(&case.model, &table, &case.scenarios, ch, case.x0())
                    .map_err(|e| Failure::from(e).context(&format!("chronicle {c}")))
            })
            .collect::<Result<_, Failure>>()?;
        for (c, trace) in traces.iter().enumerate() {
            let name = format!("trace_{}_{c}.csv", s.as_str());
            write_trace_csv(create(&out.join(&name))?, c, trace, n)?;
            files.push(name);
            let volume: f64 = trace
                .weeks
                .iter()
                .flat_map(|w| &w.controls)
                .map(|h| h.pump + h.turb)
                .sum();
            println!(
                "{} policy, chronicle {c}: total cost {:.6}, pump+turb {:.6}",
                s.as_str(),
                trace.total_cost(),
                volume
            );
        }
        summaries.push((s.as_str(), aggregate_kpis(&traces)?));
    }
    let refs: Vec<(&str, &_)> = summaries.iter().map(|(l, k)| (*l, k)).collect();
    write_kpi_csv(create(&out.join("kpi_summary.csv"))?, &refs, n)?;
    files.push("kpi_summary.csv".into());
    Ok(files)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn verify(case: &Case, out: &Path) -> Result<Vec<String>, Failure> {
    let mut problems = Vec::new();

    let limits = InstanceLimits {
        max_units: 2,
        max_hours: 3,
        max_scenarios: 3,
        max_cells: 6,
    };
    let count = case.config.verify.instances;
    let deviations: Vec<(f64, f64)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let inst = random_instance(case.seed.wrapping_mul(1_000_003).wrapping_add(i), limits);
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
            let hd: Vec<f64> = inst
                .blocks
                .iter()
                .map(|b| solve_week_hd(inst.x, b, &inst.ctg, &inst.model).map(|s| s.value))
                .collect::<Result<_, _>>()?;
            let hd = hd.iter().sum::<f64>() / hd.len() as f64;
            let dhd = solve_week_dhd(inst.x, &inst.blocks, &inst.ctg, &inst.model)?.value;
            Ok((relative(hd, hd_oracle), relative(dhd, dhd_oracle)))
        })
        .collect::<Result<_, usageval_core::Error>>()?;
    let max_hd = deviations.iter().map(|d| d.0).fold(0.0, f64::max);
    let max_dhd = deviations.iter().map(|d| d.1).fold(0.0, f64::max);
    println!("oracle campaign: {count} instances, max relative deviation hd {max_hd:.3e}, dhd {max_dhd:.3e}");
    if max_hd > ORACLE_TOL || max_dhd > ORACLE_TOL {
        problems.push(format!(
            "solver deviates from the oracle by {:.3e}",
            max_hd.max(max_dhd)
        ));
    }

    if case.config.toy_wphr {
        let chain = toy_chain(&case.model, &case.scenarios, &case.grid, &case.timeline)?;
        let breach = chain.worst_breach();
        println!(
            "inequality chain: worst relative breach {breach:.3e}, {} points with WPHR above DHD",
            chain.strict_wphr_points(1e-9)
        );
        if !chain.holds(CHAIN_TOL) {
            problems.push(format!("HD <= DHD <= WPHR breached by {breach:.3e}"));
        }
    } else {
        println!("inequality chain: skipped (toy_wphr is off)");
    }

    let hd_path = table_path(out, InformationStructure::Hd);
    let dhd_path = table_path(out, InformationStructure::Dhd);
    if hd_path.exists() && dhd_path.exists() {
        let load = |p: &Path, s| {
            load_bellman_csv(p, s).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))
        };
        let hd = load(&hd_path, InformationStructure::Hd)?;
        let dhd = load(&dhd_path, InformationStructure::Dhd)?;
        let report = compare_tables(&hd, &dhd)?;
        let v = report.violations();
        println!("stored tables: {} violations of HD <= DHD", v.len());
        if let Some(first) = v.first() {
            problems.push(format!(
                "stored tables violate HD <= DHD at week {} x = {}",
                first.week, first.x
            ));
        }
    }

    if problems.is_empty() {
        println!("verify: all checks passed");
        Ok(Vec::new())
    } else {
        Err(Failure::Violation(problems.join("; ")))
    }
}

pub fn synth(case: &Case, out: &Path) -> Result<Vec<String>, Failure> {
    let spec = case.synth_spec();
    let (set, chronicles) = synthesize_case_study(case.seed, &spec)?;
    save_scenarios(&out.join("scenarios.csv"), &set)?;
    save_chronicles(&out.join("chronicles.csv"), spec.num_units, &chronicles)?;
    println!(
        "synth: {} weeks, {} scenarios, {} chronicles",
        spec.num_weeks,
        set.num_scenarios(),
        chronicles.len()
    );
    Ok(vec!["scenarios.csv".into(), "chronicles.csv".into()])
}
