//! Configuration-driven front end: runs one job, writes its mesh and a JSON
//! report.

pub mod config;
pub mod export;
pub mod jobs;
pub mod report;
pub mod tolerances;

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub use config::{Job, JobConfig, JobKind, MeshFormat};
pub use report::RunReport;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "SOLSURF_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Io(_) => 3,
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct E<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&E { error: self.kind(), message: self.to_string() }).expect("plain strings")
    }
}

/// Outcome of [`run`].
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    /// Files written (mesh, then report).
    pub files: Vec<PathBuf>,
}

/// Runs `config`. With `export` set the mesh (when the job produces a
/// surface) and the report are written to the output directory; otherwise
/// nothing touches the disk.
pub fn run(config: &JobConfig, export: bool) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let mut report = RunReport::new(config.job.kind().name(), report::Provenance::of(config));
    let surface = jobs::execute(config, &mut report);
    let mut files = Vec::new();
    if export {
        let stem = config.stem();
        if let Some(s) = &surface {
            let fmt = config.output.format;
            let mesh = export::triangulate(s, None);
            let path = config.output.dir.join(format!("{stem}.{}", fmt.extension()));
            report.artifacts.push(path.file_name().expect("has a name").to_string_lossy().into_owned());
            export::write_atomic(&path, &export::encode(s, &mesh, fmt))?;
            files.push(path);
        }
        let path = config.output.dir.join(format!("{stem}.report.json"));
        export::write_atomic(&path, &report.to_json())?;
        files.push(path);
    }
    Ok(RunOutcome { report, files })
}

/// Sizes the global worker pool from [`THREADS_ENV`] when set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}
