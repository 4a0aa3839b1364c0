//! Run report with provenance.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};
use solsurf::numerics::ResidualReport;

use crate::config::{GridSpec, JobConfig};

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    /// SHA-256 of the effective configuration as canonical JSON, without
    /// the output section.
    pub config_sha256: String,
    pub grid: GridSpec,
    pub version: &'static str,
}

impl Provenance {
    pub fn of(config: &JobConfig) -> Self {
        let mut v = serde_json::to_value(config).expect("configs serialize");
        if let Some(m) = v.as_object_mut() {
            m.remove("output");
        }
        let bytes = serde_json::to_vec(&v).expect("values serialize");
        let hash = Sha256::digest(&bytes);
        Self {
            config_sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
            grid: config.grid_spec(),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// One gating check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    #[serde(flatten)]
    pub report: ResidualReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub job: &'static str,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Non-gating quantities (Euler report, fits, measured constants).
    pub diagnostics: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn new(job: &'static str, provenance: Provenance) -> Self {
        Self {
            job,
            pass: true,
            checks: Vec::new(),
            diagnostics: BTreeMap::new(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
            provenance,
        }
    }

    /// Adds a check; names must be unique within a report.
    pub fn check(&mut self, report: ResidualReport) {
        assert!(
            self.checks.iter().all(|c| c.report.name != report.name),
            "duplicate check {}",
            report.name
        );
        self.pass &= report.pass;
        self.checks.push(Check { report });
    }

    pub fn diagnostic(&mut self, name: &str, value: impl Serialize) {
        self.diagnostics.insert(name.to_string(), serde_json::to_value(value).expect("diagnostics serialize"));
    }

    /// Records a failure that stopped the computation.
    pub fn failure(&mut self, stage: &str, message: String) {
        let mut r = ResidualReport::scalar(format!("{stage}-completed"), f64::INFINITY, 0.0);
        r.notes.push(message);
        self.check(r);
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("reports serialize");
        v.push(b'\n');
        v
    }
}
