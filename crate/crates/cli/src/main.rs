use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sobolev_homeo_cli::{run, write_outcome, CommandName, Emit, RunSpec};

/// Thread count for parallel quadrature; unset means one per core.
const THREADS_ENV: &str = "SOBOLEV_HOMEO_THREADS";

#[derive(Parser)]
#[command(
    name = "sobolev-homeo",
    version,
    about = "Construct and verify W^{1,p} approximating sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Staircase convergence table and samples.
    Staircase(Common),
    /// Feasibility check and approximation of a pair (f, F).
    Approx1d(Common),
    /// Twist-map norm, determinant, Jacobian and inverse checks.
    Twist(Common),
    /// Localized rotation error, fitted constant and slopes.
    Localize(Common),
    /// Level sweep of volume-preserving approximants of a rotation field.
    Theoremb(Common),
    /// Acceptance suite.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run spec; defaults are used when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory (overrides the spec).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed (overrides the spec).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    emit: Emit,
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn load_spec(name: CommandName, path: Option<&PathBuf>) -> Result<RunSpec, String> {
    let Some(path) = path else {
        return Ok(RunSpec::new(name));
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let spec: RunSpec = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if spec.command != name {
        return Err(format!(
            "spec is for `{}` but `{}` was requested",
            spec.command.as_str(),
            name.as_str()
        ));
    }
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Cmd::Staircase(c) => (CommandName::Staircase, c),
        Cmd::Approx1d(c) => (CommandName::Approx1d, c),
        Cmd::Twist(c) => (CommandName::Twist, c),
        Cmd::Localize(c) => (CommandName::Localize, c),
        Cmd::Theoremb(c) => (CommandName::Theoremb, c),
        Cmd::Verify(c) => (CommandName::Verify, c),
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let spec = match load_spec(name, common.spec.as_ref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match run(&spec, common.seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let dir = common
        .out
        .clone()
        .or_else(|| spec.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    match write_outcome(&outcome, &dir, common.emit) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }
    for c in &outcome.checks {
        println!("[{}] {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    if outcome.all_pass() {
        ExitCode::SUCCESS
    } else {
        let failures = serde_json::to_string(&outcome.failures()).unwrap_or_default();
        eprintln!("{failures}");
        ExitCode::from(1)
    }
}
