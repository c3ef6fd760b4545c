//! Command-line driver: Bellman tables, policy simulation, verification
//! and scenario synthesis.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use usageval_cli::commands;
use usageval_cli::{load_case, Failure, StructureSelection};

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `output_dir`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    structure: Option<StructureSelection>,
}

#[derive(Parser)]
#[command(
    name = "usageval",
    version,
    about = "Storage usage values under HD and DHD information structures"
)]
struct Args {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Compute Bellman tables, usage values and the HD/DHD comparison.
    Solve(Common),
    /// Simulate the chronicles under each selected policy.
    Simulate(Common),
    /// Cross-check the solver against brute force and the inequality chain.
    Verify(Common),
    /// Write synthetic scenarios and chronicles as CSV.
    Synth(Common),
}

fn run(name: &str, common: &Common) -> Result<(), Failure> {
    let case = load_case(&common.config, common.seed, common.structure)?;
    let out = case.output_dir(common.out.as_deref());
    std::fs::create_dir_all(&out)
        .map_err(|e| Failure::Validation(format!("cannot create {}: {e}", out.display())))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(Failure::Validation("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::Validation(format!("thread pool: {e}")))?;
    let out = out.as_path();
    let result = pool.install(|| match name {
        "solve" => commands::solve(&case, out),
        "simulate" => commands::simulate(&case, out),
        "verify" => commands::verify(&case, out),
        _ => commands::synth(&case, out),
    });
    let files = match &result {
        Ok(f) => f.clone(),
        Err(_) => Vec::new(),
    };
    commands::write_manifest(out, &case, name, &files)?;
    result.map(|_| ())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (name, common) = match &args.command {
        Sub::Solve(c) => ("solve", c),
        Sub::Simulate(c) => ("simulate", c),
        Sub::Verify(c) => ("verify", c),
        Sub::Synth(c) => ("synth", c),
    };
    match run(name, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("usageval {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
