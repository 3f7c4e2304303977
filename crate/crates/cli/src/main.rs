use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use impscat::{run_with_threads, CliError, ScenarioConfig, ScenarioKind};

#[derive(Parser)]
#[command(name = "impscat", version, about = "Scattering by many small impedance particles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form field of one particle and its far-field pattern.
    Onebody(RunArgs),
    /// Particle cloud, many-body system and effective field.
    Manybody(RunArgs),
    /// Limiting integral equation on a cube grid and the refraction shift.
    Medium(RunArgs),
    /// Particle-system fields against the grid solution over decreasing sizes.
    Convergence(RunArgs),
    /// Exponent of the scattered field against particle size.
    Scaling(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Solver tolerance (overrides `solver.tol`).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(kind: ScenarioKind, args: &RunArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io { path: args.config.clone(), source })?;
    let origin = args.config.display().to_string();
    let mut cfg = ScenarioConfig::parse(&text, &origin)?;
    cfg.base_dir = args.config.parent().map(PathBuf::from).unwrap_or_default();
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = args.tol {
        cfg.solver.tol = tol;
    }
    if let Some(out) = &args.out {
        // Relative to the working directory, not the config file.
        cfg.output.dir = std::env::current_dir().map(|d| d.join(out)).unwrap_or_else(|_| out.clone());
    }
    if args.threads == Some(0) {
        return Err(CliError::Config { origin: "--threads".into(), line: None, key: "threads".into(), message: "must be positive".into() });
    }
    cfg.validate(kind).map_err(|e| impscat::config::locate(&text, &origin, e))?;
    let report = run_with_threads(&cfg, kind, args.threads)?;
    println!("{}: {:.2} s", kind.name(), report.wall_time_s);
    for (k, v) in &report.headline {
        println!("  {k} = {}", serde_json::to_string(v).unwrap_or_default());
    }
    for p in &report.outputs {
        println!("  wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Onebody(a) => (ScenarioKind::Onebody, a),
        Command::Manybody(a) => (ScenarioKind::Manybody, a),
        Command::Medium(a) => (ScenarioKind::Medium, a),
        Command::Convergence(a) => (ScenarioKind::Convergence, a),
        Command::Scaling(a) => (ScenarioKind::Scaling, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
