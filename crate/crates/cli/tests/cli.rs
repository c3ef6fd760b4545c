use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn usageval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_usageval"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    usageval(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn toy() -> PathBuf {
    configs().join("toy.json")
}

#[test]
fn solve_and_simulate_write_the_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&run("solve", &toy(), out, &[])), 0);
    for f in [
        "bellman_hd.csv",
        "bellman_dhd.csv",
        "usage_values.csv",
        "comparison.csv",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert_eq!(code(&run("simulate", &toy(), out, &[])), 0);
    let traces = fs::read_dir(out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("trace_")
        })
        .count();
    // two chronicles under two policies
    assert_eq!(traces, 4);
    let kpi = fs::read_to_string(out.join("kpi_summary.csv")).unwrap();
    assert!(kpi.starts_with("policy,week,traces,cost,"));
    assert!(kpi.lines().any(|l| l.starts_with("hd,all,2,")));
    assert!(kpi.lines().any(|l| l.starts_with("dhd,all,2,")));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn hd_only_run_skips_the_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&run("solve", &toy(), out, &["--structure", "hd"])), 0);
    assert!(out.join("bellman_hd.csv").exists());
    assert!(!out.join("bellman_dhd.csv").exists());
    assert!(!out.join("comparison.csv").exists());
    let uv = fs::read_to_string(out.join("usage_values.csv")).unwrap();
    let row = uv.lines().nth(1).unwrap();
    assert!(row.ends_with(','), "dhd column should be empty: {row}");
}

#[test]
fn malformed_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(toy())
        .unwrap()
        .replace("\"p_max\": 4.0", "\"p_max\": \"four\"");
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, text).unwrap();
    let o = run("solve", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("model.units[0].p_max"), "{err}");
}

#[test]
fn unknown_field_and_zero_threads_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(toy())
        .unwrap()
        .replacen('{', "{\n  \"grdi\": 3,", 1);
    let cfg = dir.path().join("typo.json");
    fs::write(&cfg, text).unwrap();
    assert_eq!(code(&run("solve", &cfg, &dir.path().join("a"), &[])), 1);
    assert_eq!(
        code(&run(
            "solve",
            &toy(),
            &dir.path().join("b"),
            &["--threads", "0"]
        )),
        1
    );
}

#[test]
fn chronicle_with_missing_week_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(configs().join("toy_scenarios.csv")).unwrap();
    fs::write(dir.path().join("toy_scenarios.csv"), &src).unwrap();
    let short: String = src
        .lines()
        .filter(|l| !l.starts_with("1,"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(dir.path().join("short.csv"), short).unwrap();
    let text = fs::read_to_string(toy()).unwrap().replace(
        "\"chronicles\": { \"file\": \"toy_scenarios.csv\" }",
        "\"chronicles\": { \"file\": \"short.csv\" }",
    );
    assert!(text.contains("short.csv"));
    let cfg = dir.path().join("toy.json");
    fs::write(&cfg, text).unwrap();
    assert_eq!(
        code(&run("simulate", &cfg, &dir.path().join("out"), &[])),
        1
    );
}

#[test]
fn verify_flags_a_corrupted_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&run("solve", &toy(), out, &[])), 0);
    assert_eq!(code(&run("verify", &toy(), out, &[])), 0);
    // push every non-terminal HD value above its DHD counterpart
    let dhd = fs::read_to_string(out.join("bellman_dhd.csv")).unwrap();
    let mut lines = dhd.lines();
    let mut bad = format!("{}\n", lines.next().unwrap());
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        let v: f64 = f[2].parse().unwrap();
        let v = if f[0] == "2" { v } else { v + 1000.0 };
        bad.push_str(&format!("{},{},{:.16e}\n", f[0], f[1], v));
    }
    fs::write(out.join("bellman_hd.csv"), bad).unwrap();
    let o = run("verify", &toy(), out, &[]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn synth_round_trips_through_a_file_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen");
    assert_eq!(
        code(&run("synth", &configs().join("desk.json"), &out, &[])),
        0
    );
    let text = fs::read_to_string(configs().join("desk.json")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["scenarios"] = serde_json::json!({ "file": "gen/scenarios.csv" });
    cfg["chronicles"] = serde_json::json!({ "file": "gen/chronicles.csv" });
    cfg["grid"]["points"] = serde_json::json!(5);
    let path = dir.path().join("from_files.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(
        code(&run(
            "simulate",
            &path,
            &dir.path().join("sim"),
            &["--structure", "hd"]
        )),
        0
    );
}

#[test]
fn missing_config_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("solve", &dir.path().join("nope.json"), dir.path(), &[]);
    assert_eq!(code(&o), 1);
}

fn files_with(out: &Path, prefix: &str) -> usize {
    fs::read_dir(out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with(prefix)
        })
        .count()
}

#[test]
fn desk_case_produces_four_tables_then_six_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let desk = configs().join("desk.json");
    assert_eq!(code(&run("solve", &desk, out, &[])), 0);
    let csvs = fs::read_dir(out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "csv")
        })
        .count();
    assert_eq!(csvs, 4);
    assert_eq!(code(&run("simulate", &desk, out, &[])), 0);
    assert_eq!(files_with(out, "trace_"), 6);
    assert_eq!(files_with(out, "kpi_summary"), 1);
}

#[test]
fn output_directory_can_come_from_the_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(
        configs().join("toy_scenarios.csv"),
        dir.path().join("toy_scenarios.csv"),
    )
    .unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(toy()).unwrap()).unwrap();
    cfg["output_dir"] = serde_json::json!("results");
    let path = dir.path().join("toy.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let o = usageval(&[
        "solve",
        "--config",
        path.to_str().unwrap(),
        "--structure",
        "dhd",
    ]);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("results/bellman_dhd.csv").exists());
}
