//! Job configuration: one JSON document, unknown keys rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use solsurf::numerics::{Grid2, Plane};
use solsurf::weierstrass::Inducing;

use crate::tolerances::Tolerances;
use crate::CliError;

/// Smallest accepted node count per direction; residual stencils plus two
/// excluded boundary rings need at least this many.
pub const MIN_NODES: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub job: Job,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Seed for randomized spot checks.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    7
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub nu: usize,
    pub nv: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    #[default]
    Obj,
    Ply,
    Csv,
}

impl MeshFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Obj => "obj",
            Self::Ply => "ply",
            Self::Csv => "csv",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: MeshFormat,
    /// File stem for the mesh and report; defaults to the job kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_dir(), format: MeshFormat::Obj, stem: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Job {
    Weierstrass(WeierstrassJob),
    SolitonSurface(SolitonJob),
    Backlund(BacklundJob),
    ClassicalCheck(ClassicalJob),
    CocycleCheck(CocycleJob),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    Weierstrass,
    SolitonSurface,
    Backlund,
    ClassicalCheck,
    CocycleCheck,
}

impl JobKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Weierstrass => "weierstrass",
            Self::SolitonSurface => "soliton-surface",
            Self::Backlund => "backlund",
            Self::ClassicalCheck => "classical-check",
            Self::CocycleCheck => "cocycle-check",
        }
    }
}

impl Job {
    pub fn kind(&self) -> JobKind {
        match self {
            Self::Weierstrass(_) => JobKind::Weierstrass,
            Self::SolitonSurface(_) => JobKind::SolitonSurface,
            Self::Backlund(_) => JobKind::Backlund,
            Self::ClassicalCheck(_) => JobKind::ClassicalCheck,
            Self::CocycleCheck(_) => JobKind::CocycleCheck,
        }
    }

    /// Built-in parameters of each kind.
    pub fn default_for(kind: JobKind) -> Self {
        let v = serde_json::json!({ "kind": kind.name() });
        serde_json::from_value(v).expect("every job kind has defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeierstrassJob {
    /// Poles a_j of the product solution as [re, im]; ignored when
    /// `manufactured` is set.
    #[serde(default = "default_poles")]
    pub poles: Vec<[f64; 2]>,
    /// Use the nonconstant-H manufactured pair instead of poles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<ManufacturedSpec>,
    /// Constant mean curvature for pole solutions.
    #[serde(default = "one")]
    pub h: f64,
    /// Quartic parameter; defaults to the pole when there is one real pole.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_param: Option<f64>,
    #[serde(default)]
    pub normalization: Inducing,
    /// Node where X = 0; defaults to the grid corner (0, 0).
    #[serde(default)]
    pub base: [usize; 2],
    /// Reference node of the quartic fit; defaults to the grid centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quartic_reference: Option<[usize; 2]>,
    /// Pole exclusion radius; defaults to three grid steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion_radius: Option<f64>,
    #[serde(default = "ten")]
    pub spot_checks: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedSpec {
    #[serde(default = "kappa")]
    pub kappa: f64,
    #[serde(default = "one")]
    pub d: f64,
    #[serde(default = "phase")]
    pub c: f64,
}

fn default_poles() -> Vec<[f64; 2]> {
    vec![[1.0, 0.0]]
}
fn one() -> f64 {
    1.0
}
fn ten() -> usize {
    10
}
fn kappa() -> f64 {
    0.3
}
fn phase() -> f64 {
    0.7
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonJob {
    /// Spectral parameter λ.
    #[serde(default = "one")]
    pub lambda: f64,
    /// Kink parameter: ϑ = 4 arctan exp(a u + v/a).
    #[serde(default = "one")]
    pub a: f64,
    /// Scale of the symmetry φ = c·ϑ_v.
    #[serde(default = "one")]
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeedSolution {
    Vacuum,
    Kink {
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        c: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacklundJob {
    #[serde(default = "vacuum")]
    pub seed_solution: SeedSolution,
    #[serde(default = "one")]
    pub a_param: f64,
    /// Value of ũ at the first grid node; for the vacuum it defaults to the
    /// value of the c = 0 kink there.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<f64>,
    /// Initial value of ψ for the transformed-equation check.
    #[serde(default)]
    pub psi0: f64,
}

fn vacuum() -> SeedSolution {
    SeedSolution::Vacuum
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalSurface {
    Sphere,
    Plane,
    Tractroid,
    Pseudospherical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalJob {
    #[serde(default = "sphere")]
    pub surface: ClassicalSurface,
}

fn sphere() -> ClassicalSurface {
    ClassicalSurface::Sphere
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CocycleSystem {
    SineGordon,
    Kdv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleJob {
    #[serde(default = "sine_gordon")]
    pub system: CocycleSystem,
    /// KdV soliton speed.
    #[serde(default = "one")]
    pub speed: f64,
    /// Random det-1 matrices for the SL(2,R) decomposition round trip.
    #[serde(default = "thousand")]
    pub sl2_samples: usize,
}

fn sine_gordon() -> CocycleSystem {
    CocycleSystem::SineGordon
}
fn thousand() -> usize {
    1000
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_for(kind: JobKind) -> Self {
        Self {
            job: Job::default_for(kind),
            grid: None,
            tolerances: BTreeMap::new(),
            output: OutputSpec::default(),
            seed: default_seed(),
        }
    }

    /// Built-in configuration of a `check` suite: the kind's defaults on a
    /// grid fine enough for the default tolerances.
    pub fn suite(kind: JobKind) -> Self {
        let mut c = Self::default_for(kind);
        let mut g = c.grid_spec();
        let n = match kind {
            JobKind::Weierstrass | JobKind::ClassicalCheck => 801,
            JobKind::SolitonSurface => 401,
            JobKind::Backlund => {
                (g.u, g.v) = ([-0.25, 0.25], [-0.25, 0.25]);
                2001
            }
            JobKind::CocycleCheck => 201,
        };
        (g.nu, g.nv) = (n, n);
        c.grid = Some(g);
        c
    }

    /// Grid in effect: the configured one or the kind's default domain at
    /// 201².
    pub fn grid_spec(&self) -> GridSpec {
        self.grid.unwrap_or_else(|| {
            let (u, v) = match &self.job {
                Job::Weierstrass(w) if w.manufactured.is_some() => ([-2.0, 2.0], [-1.0, 1.0]),
                Job::Weierstrass(_) => ([3.0, 5.0], [-1.0, 1.0]),
                Job::SolitonSurface(_) | Job::Backlund(_) => ([-4.0, 4.0], [-4.0, 4.0]),
                Job::ClassicalCheck(c) => match c.surface {
                    ClassicalSurface::Sphere => ([0.3, std::f64::consts::PI - 0.3], [0.0, std::f64::consts::TAU]),
                    ClassicalSurface::Plane => ([-1.0, 1.0], [-1.0, 1.0]),
                    ClassicalSurface::Tractroid => ([0.5, 3.0], [0.0, std::f64::consts::TAU]),
                    ClassicalSurface::Pseudospherical => ([-0.5, 0.5], [-0.5, 0.5]),
                },
                Job::CocycleCheck(_) => ([-4.0, 4.0], [-4.0, 4.0]),
            };
            GridSpec { u, v, nu: 201, nv: 201 }
        })
    }

    pub fn grid(&self) -> Result<Grid2, CliError> {
        let g = self.grid_spec();
        let plane = if matches!(self.job, Job::Weierstrass(_)) { Plane::Complex } else { Plane::Real };
        Grid2::new((g.u[0], g.u[1]), (g.v[0], g.v[1]), g.nu, g.nv, plane).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        Tolerances::with_overrides(&self.tolerances)
    }

    /// Schema-level checks that do not need any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = self.grid_spec();
        if g.nu < MIN_NODES || g.nv < MIN_NODES {
            return Err(CliError::Config(format!(
                "grid too coarse: {}x{} nodes, need at least {MIN_NODES} per direction",
                g.nu, g.nv
            )));
        }
        self.grid()?;
        self.tolerances()?;
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        match &self.job {
            Job::Weierstrass(w) => {
                if w.manufactured.is_none() && w.poles.is_empty() {
                    return bad("weierstrass job needs at least one pole");
                }
                if !(w.h > 0.0) {
                    return bad("mean curvature h must be positive");
                }
                if w.base[0] >= g.nu || w.base[1] >= g.nv {
                    return bad("base node outside the grid");
                }
                if let Some([i, j]) = w.quartic_reference {
                    if i >= g.nu || j >= g.nv {
                        return bad("quartic reference node outside the grid");
                    }
                }
            }
            Job::SolitonSurface(s) => {
                if s.lambda == 0.0 || s.a == 0.0 {
                    return bad("lambda and a must be nonzero");
                }
            }
            Job::Backlund(b) => {
                if b.a_param == 0.0 {
                    return bad("a_param must be nonzero");
                }
                if let SeedSolution::Kink { a, .. } = b.seed_solution {
                    if a == 0.0 {
                        return bad("kink parameter must be nonzero");
                    }
                }
            }
            Job::ClassicalCheck(_) | Job::CocycleCheck(_) => {}
        }
        Ok(())
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.job.kind().name().to_string())
    }
}
