use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use solsurf_cli::config::{JobConfig, JobKind, MeshFormat};
use solsurf_cli::tolerances::parse_override;
use solsurf_cli::{init_threads, run, CliError};

#[derive(Parser)]
#[command(name = "solsurf", version, about = "Generate surfaces from integrable systems and verify their identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a job and export its mesh and report.
    Gen {
        kind: JobKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<MeshFormat>,
        /// Tolerance override, repeatable.
        #[arg(long = "tol", value_parser = parse_override)]
        tol: Vec<(String, f64)>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the checks of a job without writing files; the report goes to stdout.
    Check {
        suite: JobKind,
        /// Config to use instead of the built-in suite configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "tol", value_parser = parse_override)]
        tol: Vec<(String, f64)>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &PathBuf, kind: JobKind) -> Result<JobConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cfg = JobConfig::from_json(&text)?;
    if cfg.job.kind() != kind {
        return Err(CliError::Config(format!(
            "config describes a {} job, not {}",
            cfg.job.kind().name(),
            kind.name()
        )));
    }
    Ok(cfg)
}

fn apply(cfg: &mut JobConfig, tol: Vec<(String, f64)>, seed: Option<u64>) {
    cfg.tolerances.extend(tol);
    if let Some(s) = seed {
        cfg.seed = s;
    }
}

fn main_inner() -> Result<bool, CliError> {
    let cli = Cli::parse();
    init_threads()?;
    match cli.command {
        Command::Gen { kind, config, out, format, tol, seed } => {
            let mut cfg = load(&config, kind)?;
            apply(&mut cfg, tol, seed);
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            if let Some(f) = format {
                cfg.output.format = f;
            }
            let outcome = run(&cfg, true)?;
            for f in &outcome.files {
                println!("{}", f.display());
            }
            eprintln!("{}", if outcome.report.pass { "PASS" } else { "FAIL" });
            Ok(outcome.report.pass)
        }
        Command::Check { suite, config, tol, seed } => {
            let mut cfg = match config {
                Some(p) => load(&p, suite)?,
                None => JobConfig::suite(suite),
            };
            apply(&mut cfg, tol, seed);
            let outcome = run(&cfg, false)?;
            print!("{}", String::from_utf8_lossy(&outcome.report.to_json()));
            Ok(outcome.report.pass)
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
