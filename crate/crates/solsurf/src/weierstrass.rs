//! Generalized Weierstrass inducing: spinor pairs (ψ₁, ψ₂) solving
//! ∂ψ₁ = pHψ₂, ∂̄ψ₂ = −pHψ₁ with p = |ψ₁|² + |ψ₂|², their sigma-model
//! description through ρ = ψ₁/ψ̄₂, the induced surfaces and the spin matrix.
//!
//! Grids are complex-plane grids, z = u + iv, with ∂ = ½(∂_u − i∂_v).

use nalgebra::{Matrix2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{AlgebraMatrix, Mat2};
use crate::geometry::{fundamental_forms, Immersion3};
use crate::numerics::{
    contour_integral, diff, diff_zzbar, edge_integral, interior_mask, ComplexField, ContourPath, Direction, Field,
    Grid2, NumError, Quadrature, ResidualReport, ScalarField, Staircase, C64,
};

#[derive(Debug, Error)]
pub enum WeierstrassError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("at least one pole is required")]
    NoPoles,
    #[error("poles {0} and {1} coincide")]
    DuplicatePole(usize, usize),
    #[error("mean curvature must be positive, found {value} at node {node}")]
    NonPositiveH { node: usize, value: f64 },
    #[error("grid must be a complex-plane grid")]
    NotComplex,
}

pub type WResult<T> = Result<T, WeierstrassError>;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn dz(f: &ComplexField) -> WResult<ComplexField> {
    Ok(diff(f, Direction::Z)?)
}

fn dzbar(f: &ComplexField) -> WResult<ComplexField> {
    Ok(diff(f, Direction::Zbar)?)
}

fn zip3<A: Copy, B: Copy, C: Copy, R>(a: &Field<A>, b: &Field<B>, c: &Field<C>, f: impl Fn(A, B, C) -> R) -> Field<R> {
    Field { grid: a.grid, data: (0..a.data.len()).map(|k| f(a.data[k], b.data[k], c.data[k])).collect() }
}

/// Solution candidate (ψ₁, ψ₂) of the GW system.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorPair {
    pub psi1: ComplexField,
    pub psi2: ComplexField,
}

impl SpinorPair {
    pub fn new(psi1: ComplexField, psi2: ComplexField) -> WResult<Self> {
        if psi1.grid != psi2.grid {
            return Err(NumError::GridMismatch.into());
        }
        Ok(Self { psi1, psi2 })
    }

    pub fn grid(&self) -> Grid2 {
        self.psi1.grid
    }

    /// p = |ψ₁|² + |ψ₂|².
    pub fn p(&self) -> ScalarField {
        self.psi1.zip_map(&self.psi2, |a, b| a.norm_sqr() + b.norm_sqr()).expect("grids agree")
    }

    /// The pair with both spinors negated (ε = −1).
    pub fn negated(&self) -> Self {
        Self { psi1: self.psi1.map(|x| -x), psi2: self.psi2.map(|x| -x) }
    }

    /// J = ψ̄₁∂ψ₂ − ψ₂∂ψ̄₁.
    pub fn current(&self) -> WResult<ComplexField> {
        let c1 = self.psi1.conj();
        let (d2, dc1) = (dz(&self.psi2)?, dz(&c1)?);
        Ok(Field {
            grid: self.grid(),
            data: (0..c1.data.len()).map(|k| c1.data[k] * d2.data[k] - self.psi2.data[k] * dc1.data[k]).collect(),
        })
    }
}

/// Mean curvature H with ∂ ln H.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanCurvatureField {
    pub h: ScalarField,
    pub dz_ln_h: ComplexField,
}

/// Lower bound on |H|.
pub const EPS_H: f64 = 1e-8;

impl MeanCurvatureField {
    pub fn constant(grid: Grid2, value: f64) -> WResult<Self> {
        Self::with_derivative(Field::constant(grid, value), Field::constant(grid, C64::new(0.0, 0.0)))
    }

    /// ∂ ln H by finite differences.
    pub fn new(h: ScalarField) -> WResult<Self> {
        let ln = h.map(|x| C64::new(x.abs().ln(), 0.0));
        let d = dz(&ln)?;
        Self::with_derivative(h, d)
    }

    pub fn with_derivative(h: ScalarField, dz_ln_h: ComplexField) -> WResult<Self> {
        if h.grid != dz_ln_h.grid {
            return Err(NumError::GridMismatch.into());
        }
        if let Some((node, &value)) = h.data.iter().enumerate().find(|(_, v)| v.abs() < EPS_H || !v.is_finite()) {
            return Err(WeierstrassError::NonPositiveH { node, value });
        }
        Ok(Self { h, dz_ln_h })
    }

    pub fn is_constant(&self) -> bool {
        self.dz_ln_h.data.iter().all(|d| *d == C64::new(0.0, 0.0))
    }

    /// ∂H = H ∂ ln H.
    pub fn dz_h(&self) -> ComplexField {
        self.h.zip_map(&self.dz_ln_h, |h, d| d * h).expect("grids agree")
    }
}

/// Sigma-model field ρ with first derivatives, the tracked square root of
/// ∂ρ, and the sign ε.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaField {
    pub rho: ComplexField,
    pub d_rho: ComplexField,
    pub dbar_rho: ComplexField,
    /// (∂ρ)^{1/2}, continuous along the first row and then along columns.
    pub sqrt_d_rho: ComplexField,
    /// Nodes where continuation could not decide between the two roots.
    pub branch_points: Vec<(usize, usize)>,
    /// False where ∂ρ vanishes or is not finite (spinors undefined).
    pub defined: Vec<bool>,
    pub epsilon: f64,
}

impl SigmaField {
    /// Derivatives by finite differences.
    pub fn new(rho: ComplexField) -> WResult<Self> {
        let (d, db) = (dz(&rho)?, dzbar(&rho)?);
        Self::with_derivatives(rho, d, db)
    }

    pub fn with_derivatives(rho: ComplexField, d_rho: ComplexField, dbar_rho: ComplexField) -> WResult<Self> {
        if d_rho.grid != rho.grid || dbar_rho.grid != rho.grid {
            return Err(NumError::GridMismatch.into());
        }
        let (sqrt_d_rho, branch_points, defined) = tracked_sqrt(&d_rho);
        Ok(Self { rho, d_rho, dbar_rho, sqrt_d_rho, branch_points, defined, epsilon: 1.0 })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon.signum();
        self
    }

    pub fn grid(&self) -> Grid2 {
        self.rho.grid
    }

    /// 1 + |ρ|².
    pub fn q(&self) -> ScalarField {
        self.rho.map(|r| 1.0 + r.norm_sqr())
    }
}

/// Square root continued from the base node (nonnegative real part) along
/// row 0, then up and down every column, always taking the root nearer the
/// previous defined value.
fn tracked_sqrt(w: &ComplexField) -> (ComplexField, Vec<(usize, usize)>, Vec<bool>) {
    let g = w.grid;
    let defined: Vec<bool> = w.data.iter().map(|x| x.is_finite() && x.norm() > 1e-300).collect();
    let mut out = vec![C64::new(0.0, 0.0); g.len()];
    let mut branch = Vec::new();
    let mut pick = |k: usize, reference: Option<C64>, branch: &mut Vec<(usize, usize)>| -> Option<C64> {
        if !defined[k] {
            return reference;
        }
        let s = w.data[k].sqrt();
        let chosen = match reference {
            None => {
                if s.re < 0.0 {
                    -s
                } else {
                    s
                }
            }
            Some(r) => {
                let (a, b) = ((s - r).norm(), (s + r).norm());
                if a.min(b) > s.norm() {
                    branch.push(g.ij(k));
                }
                if a <= b {
                    s
                } else {
                    -s
                }
            }
        };
        out[k] = chosen;
        Some(chosen)
    };
    let mut row_ref = None;
    let mut row_vals = vec![None; g.nu];
    for (i, slot) in row_vals.iter_mut().enumerate() {
        row_ref = pick(g.idx(i, 0), row_ref, &mut branch);
        *slot = row_ref;
    }
    for (i, start) in row_vals.into_iter().enumerate() {
        let mut r = start;
        for j in 1..g.nv {
            r = pick(g.idx(i, j), r, &mut branch);
        }
    }
    (Field { grid: g, data: out }, branch, defined)
}

/// Distinct poles a₁…a_N of the product solution ρ = Π (z − a_j)/(z̄ − ā_j).
#[derive(Clone, Debug, PartialEq)]
pub struct PoleConfig {
    pub poles: Vec<C64>,
}

impl PoleConfig {
    pub fn new(poles: Vec<C64>) -> WResult<Self> {
        if poles.is_empty() {
            return Err(WeierstrassError::NoPoles);
        }
        for a in 0..poles.len() {
            for b in a + 1..poles.len() {
                if (poles[a] - poles[b]).norm() < 1e-12 {
                    return Err(WeierstrassError::DuplicatePole(a, b));
                }
            }
        }
        Ok(Self { poles })
    }

    /// F(z) = Σ 1/(z − a_j).
    pub fn f(&self, z: C64) -> C64 {
        self.poles.iter().map(|a| (z - a).inv()).sum()
    }

    pub fn rho_at(&self, z: C64) -> C64 {
        self.poles.iter().map(|a| (z - a) / (z - a).conj()).product()
    }

    /// ρ with the exact derivatives ∂ρ = Fρ, ∂̄ρ = −F̄ρ.
    pub fn sigma(&self, grid: Grid2) -> WResult<SigmaField> {
        let rho = Field::from_fn(grid, |x, y| self.rho_at(C64::new(x, y)));
        let f = Field::from_fn(grid, |x, y| self.f(C64::new(x, y)));
        let d = rho.zip_map(&f, |r, f| f * r)?;
        let db = rho.zip_map(&f, |r, f| -f.conj() * r)?;
        SigmaField::with_derivatives(rho, d, db)
    }

    /// p = ½|F| and J = ¼F² for the product solution with H = 1.
    pub fn closed_p_and_j(&self, grid: Grid2) -> (ScalarField, ComplexField) {
        let f = Field::from_fn(grid, |x, y| self.f(C64::new(x, y)));
        (f.map(|f| 0.5 * f.norm()), f.map(|f| f * f * 0.25))
    }

    /// Keep mask: outside disks of radius `r_excl` around every a_j and ā_j
    /// and at least `rings` from the boundary.
    pub fn keep_mask(&self, grid: &Grid2, r_excl: f64, rings: usize) -> Vec<bool> {
        let ring = interior_mask(grid, rings);
        (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                let z = grid.z(i, j);
                ring[k] && self.poles.iter().all(|a| (z - a).norm() > r_excl && (z - a.conj()).norm() > r_excl)
            })
            .collect()
    }
}

/// Default pole exclusion radius, 3h.
pub fn default_exclusion(grid: &Grid2) -> f64 {
    3.0 * grid.hu().max(grid.hv())
}

/// ψ₁ = ερ(∂̄ρ̄)^{1/2}/(H^{1/2}(1+|ρ|²)), ψ₂ = ε(∂ρ)^{1/2}/(H^{1/2}(1+|ρ|²)),
/// with (∂̄ρ̄)^{1/2} the conjugate of the tracked (∂ρ)^{1/2}. Undefined
/// nodes get ψ = 0.
pub fn rho_to_spinors(sigma: &SigmaField, h: &MeanCurvatureField) -> WResult<SpinorPair> {
    if let Some((node, &value)) = h.h.data.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(WeierstrassError::NonPositiveH { node, value });
    }
    let g = sigma.grid();
    let mut p1 = Vec::with_capacity(g.len());
    let mut p2 = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        if !sigma.defined[k] {
            p1.push(C64::new(0.0, 0.0));
            p2.push(C64::new(0.0, 0.0));
            continue;
        }
        let r = sigma.rho.data[k];
        let s = sigma.sqrt_d_rho.data[k];
        let den = h.h.data[k].sqrt() * (1.0 + r.norm_sqr());
        p1.push(r * s.conj() * (sigma.epsilon / den));
        p2.push(s * (sigma.epsilon / den));
    }
    SpinorPair::new(Field { grid: g, data: p1 }, Field { grid: g, data: p2 })
}

/// ρ = ψ₁/ψ̄₂.
pub fn spinors_to_rho(s: &SpinorPair) -> ComplexField {
    s.psi1.zip_map(&s.psi2, |a, b| a / b.conj()).expect("grids agree")
}

/// |∂ψ₁ − pHψ₂| and |∂̄ψ₂ + pHψ₁| over `mask`.
pub fn gw_residual(s: &SpinorPair, h: &MeanCurvatureField, mask: &[bool], tol: f64) -> WResult<[ResidualReport; 2]> {
    let p = s.p();
    let (d1, db2) = (dz(&s.psi1)?, dzbar(&s.psi2)?);
    let n = p.data.len();
    let r1: Vec<f64> =
        (0..n).map(|k| (d1.data[k] - s.psi2.data[k] * (p.data[k] * h.h.data[k])).norm()).collect();
    let r2: Vec<f64> =
        (0..n).map(|k| (db2.data[k] + s.psi1.data[k] * (p.data[k] * h.h.data[k])).norm()).collect();
    Ok([
        ResidualReport::from_values("gw-1", &r1, Some(mask), tol),
        ResidualReport::from_values("gw-2", &r2, Some(mask), tol),
    ])
}

/// The unforced sigma-model operator f = ∂∂̄ρ − 2ρ̄∂ρ∂̄ρ/(1+|ρ|²), with
/// ∂∂̄ρ from the 5-point Laplacian.
pub fn sigma_operator(sigma: &SigmaField) -> WResult<ComplexField> {
    let lap = diff_zzbar(&sigma.rho)?;
    let g = sigma.grid();
    Ok(Field {
        grid: g,
        data: (0..g.len())
            .map(|k| {
                let r = sigma.rho.data[k];
                lap.data[k] - r.conj() * sigma.d_rho.data[k] * sigma.dbar_rho.data[k] * (2.0 / (1.0 + r.norm_sqr()))
            })
            .collect(),
    })
}

/// Residuals f − ∂̄(ln H)∂ρ and its conjugate equation; H = None means the
/// unforced system.
pub fn sigma_residual(
    sigma: &SigmaField,
    h: Option<&MeanCurvatureField>,
    mask: &[bool],
    tol: f64,
) -> WResult<[ResidualReport; 2]> {
    let f = sigma_operator(sigma)?;
    let g = sigma.grid();
    let rb = sigma.rho.conj();
    let lapb = diff_zzbar(&rb)?;
    let mut r1 = Vec::with_capacity(g.len());
    let mut r2 = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let dl = h.map(|h| h.dz_ln_h.data[k]).unwrap_or_default();
        // ∂̄ ln H = conj(∂ ln H) for real H; ∂̄ρ̄ = conj(∂ρ), ∂ρ̄ = conj(∂̄ρ).
        r1.push((f.data[k] - dl.conj() * sigma.d_rho.data[k]).norm());
        let (dbrb, drb) = (sigma.d_rho.data[k].conj(), sigma.dbar_rho.data[k].conj());
        let r = sigma.rho.data[k];
        let fb = lapb.data[k] - r * dbrb * drb * (2.0 / (1.0 + r.norm_sqr()));
        r2.push((fb - dl * dbrb).norm());
    }
    Ok([
        ResidualReport::from_values("sigma", &r1, Some(mask), tol),
        ResidualReport::from_values("sigma-conjugate", &r2, Some(mask), tol),
    ])
}

/// J from ρ: −∂ρ∂ρ̄/(H(1+|ρ|²)²).
pub fn current_from_rho(sigma: &SigmaField, h: &MeanCurvatureField) -> ComplexField {
    let g = sigma.grid();
    Field {
        grid: g,
        data: (0..g.len())
            .map(|k| {
                let q = 1.0 + sigma.rho.data[k].norm_sqr();
                -sigma.d_rho.data[k] * sigma.dbar_rho.data[k].conj() / (h.h.data[k] * q * q)
            })
            .collect(),
    }
}

/// Residuals of the three conservation laws and of the current law:
/// ∂̄J = 0 for constant H, ∂̄𝒥 = ∂̄J + p²∂H = 0 otherwise.
pub fn conservation_residual(
    s: &SpinorPair,
    h: &MeanCurvatureField,
    mask: &[bool],
    tol: f64,
) -> WResult<[ResidualReport; 4]> {
    let (a, b) = (&s.psi1, &s.psi2);
    let sq = |f: &ComplexField| f.map(|x| x * x);
    let (ac, bc) = (a.conj(), b.conj());
    let l1 = dz(&sq(a))?.zip_map(&dzbar(&sq(b))?, |x, y| (x + y).norm())?;
    let l2 = dzbar(&sq(&ac))?.zip_map(&dz(&sq(&bc))?, |x, y| (x + y).norm())?;
    let m1 = a.zip_map(&bc, |x, y| x * y)?;
    let m2 = ac.zip_map(b, |x, y| x * y)?;
    let l3 = dz(&m1)?.zip_map(&dzbar(&m2)?, |x, y| (x + y).norm())?;
    let dbj = dzbar(&s.current()?)?;
    let p = s.p();
    let dh = h.dz_h();
    let lj = zip3(&dbj, &p, &dh, |d, p, dh| (d + dh * (p * p)).norm());
    let name = if h.is_constant() { "current" } else { "augmented-current" };
    Ok([
        ResidualReport::from_values("conservation-1", &l1.data, Some(mask), tol),
        ResidualReport::from_values("conservation-2", &l2.data, Some(mask), tol),
        ResidualReport::from_values("conservation-3", &l3.data, Some(mask), tol),
        ResidualReport::from_values(name, &lj.data, Some(mask), tol),
    ])
}

/// ∂∂̄ ln p − (|J|²/p² − H²p²); the note records the same residual with |J|
/// in place of |J|².
pub fn p_equation_residual(
    s: &SpinorPair,
    h: &MeanCurvatureField,
    mask: &[bool],
    tol: f64,
) -> WResult<ResidualReport> {
    let p = s.p();
    let j = s.current()?;
    let lp = diff_zzbar(&p.map(|x| if x > 0.0 { x.ln() } else { f64::NAN }))?;
    let n = p.data.len();
    let mut m = mask.to_vec();
    for (k, keep) in m.iter_mut().enumerate() {
        *keep &= p.data[k] > 0.0;
    }
    let hh = &h.h.data;
    let r: Vec<f64> = (0..n)
        .map(|k| lp.data[k] - (j.data[k].norm_sqr() / p.data[k].powi(2) - (hh[k] * p.data[k]).powi(2)))
        .collect();
    let printed: Vec<f64> =
        (0..n).map(|k| lp.data[k] - (j.data[k].norm() / p.data[k].powi(2) - (hh[k] * p.data[k]).powi(2))).collect();
    let alt = ResidualReport::from_values("p-equation-printed", &printed, Some(&m), tol);
    Ok(ResidualReport::from_values("p-equation", &r, Some(&m), tol)
        .with_note(format!("with |J| instead of |J|^2 the residual is {:e}", alt.max)))
}

/// Which normalization the inducing integrals carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inducing {
    /// X₁ + iX₂ = 2i∫(ψ̄₁² dz − ψ̄₂² dz̄), X₃ = −2∫(ψ̄₁ψ₂ dz + ψ₁ψ̄₂ dz̄).
    #[default]
    Generalized,
    /// The classical factors i and −1 in place of 2i and −2.
    Classical,
}

/// Options for [`induce_surface`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InduceOptions {
    pub normalization: Inducing,
    /// Base node where X = 0.
    pub base: (usize, usize),
    pub quadrature: Quadrature,
}

impl Default for InduceOptions {
    fn default() -> Self {
        Self { normalization: Inducing::Generalized, base: (0, 0), quadrature: Quadrature::EndCorrected }
    }
}

/// Induced surface with its diagnostics.
#[derive(Clone, Debug)]
pub struct InducedSurface {
    pub immersion: Immersion3,
    /// max |conj(X₁ + iX₂) − (X₁ − iX₂)_printed| where the printed second
    /// integral 2i∫(ψ₁² dz − ψ₁² dz̄) is evaluated along the same paths.
    pub printed_second_integral_gap: f64,
    /// Nodes the staircase could not reach (integrand not finite).
    pub unreached: usize,
    pub warnings: Vec<String>,
}

/// ∫ω from the base to every node: along the base row then each column
/// (or the transpose for `Staircase::ColumnFirst`).
fn cumulative(
    wz: &ComplexField,
    wzb: &ComplexField,
    base: (usize, usize),
    quad: Quadrature,
    order: Staircase,
) -> Vec<C64> {
    let g = wz.grid;
    let mut out = vec![C64::new(f64::NAN, f64::NAN); g.len()];
    out[g.idx(base.0, base.1)] = C64::new(0.0, 0.0);
    let edge = |a: (usize, usize), b: (usize, usize)| edge_integral(wz, wzb, a, b, quad);
    let line = |out: &mut Vec<C64>, start: (usize, usize), along_u: bool| {
        let (n, s) = if along_u { (g.nu, start.0) } else { (g.nv, start.1) };
        let node = |m: usize| if along_u { (m, start.1) } else { (start.0, m) };
        for m in s + 1..n {
            let (a, b) = (node(m - 1), node(m));
            out[g.idx(b.0, b.1)] = out[g.idx(a.0, a.1)] + edge(a, b);
        }
        for m in (0..s).rev() {
            let (a, b) = (node(m + 1), node(m));
            out[g.idx(b.0, b.1)] = out[g.idx(a.0, a.1)] + edge(a, b);
        }
    };
    let first_along_u = order == Staircase::RowFirst;
    line(&mut out, base, first_along_u);
    if first_along_u {
        for i in 0..g.nu {
            line(&mut out, (i, base.1), false);
        }
    } else {
        for j in 0..g.nv {
            line(&mut out, (base.0, j), true);
        }
    }
    out
}

/// Integrand pairs (ω_z, ω_z̄) of X₁ + iX₂ and X₃ (the latter complex,
/// its real part taken).
fn integrands(s: &SpinorPair, norm: Inducing) -> [(ComplexField, ComplexField); 3] {
    let (a, b) = (&s.psi1, &s.psi2);
    let c = match norm {
        Inducing::Generalized => 2.0,
        Inducing::Classical => 1.0,
    };
    let w12 = (a.map(|x| I * c * x.conj() * x.conj()), b.map(|x| -I * c * x.conj() * x.conj()));
    let w3 = (
        a.zip_map(b, |x, y| -(x.conj() * y) * c).expect("grids agree"),
        a.zip_map(b, |x, y| -(x * y.conj()) * c).expect("grids agree"),
    );
    let printed = (a.map(|x| I * c * x * x), a.map(|x| -I * c * x * x));
    [w12, w3, printed]
}

/// X(z) by quadrature along staircase paths from the base node; nodes a
/// row-first staircase cannot reach are filled from the column-first one.
pub fn induce_surface(s: &SpinorPair, opts: &InduceOptions) -> WResult<InducedSurface> {
    let g = s.grid();
    let [w12, w3, printed] = integrands(s, opts.normalization);
    let run = |w: &(ComplexField, ComplexField)| {
        let mut a = cumulative(&w.0, &w.1, opts.base, opts.quadrature, Staircase::RowFirst);
        if a.iter().any(|x| !x.is_finite()) {
            let b = cumulative(&w.0, &w.1, opts.base, opts.quadrature, Staircase::ColumnFirst);
            for (x, y) in a.iter_mut().zip(b) {
                if !x.is_finite() {
                    *x = y;
                }
            }
        }
        a
    };
    let (x12, x3, pr) = (run(&w12), run(&w3), run(&printed));
    let mut unreached = 0;
    let points: Vec<Vector3<f64>> = (0..g.len())
        .map(|k| {
            let v = Vector3::new(x12[k].re, x12[k].im, x3[k].re);
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                unreached += 1;
            }
            v
        })
        .collect();
    let gap = (0..g.len()).filter(|&k| x12[k].is_finite() && pr[k].is_finite()).map(|k| (x12[k].conj() - pr[k]).norm()).fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if unreached > 0 {
        warnings.push(format!("{unreached} nodes not reached by finite integrands"));
    }
    Ok(InducedSurface {
        immersion: Immersion3 { grid: g, points },
        printed_second_integral_gap: gap,
        unreached,
        warnings,
    })
}

/// Path-independence spot checks: for `pairs` random node pairs (seeded)
/// inside `mask`, the row-first and column-first staircase integrals of all
/// three coordinates agree. A discrepancy above 1e−4·diameter adds an
/// "inexact closure" note.
pub fn path_spot_checks(
    s: &SpinorPair,
    opts: &InduceOptions,
    mask: &[bool],
    pairs: usize,
    seed: u64,
    tol: f64,
) -> WResult<ResidualReport> {
    let g = s.grid();
    let [w12, w3, _] = integrands(s, opts.normalization);
    let keep: Vec<usize> = (0..g.len()).filter(|&k| mask[k]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diffs = Vec::new();
    let on_mask = |p: &ContourPath| p.nodes.iter().all(|&(i, j)| mask[g.idx(i, j)]);
    let mut attempts = 0;
    while diffs.len() < pairs && attempts < 100 * pairs.max(1) && !keep.is_empty() {
        attempts += 1;
        let (a, b) = (g.ij(keep[rng.gen_range(0..keep.len())]), g.ij(keep[rng.gen_range(0..keep.len())]));
        let p1 = ContourPath::staircase(&g, a, b, Staircase::RowFirst)?;
        let p2 = ContourPath::staircase(&g, a, b, Staircase::ColumnFirst)?;
        if !on_mask(&p1) || !on_mask(&p2) {
            continue;
        }
        let mut d: f64 = 0.0;
        for w in [&w12, &w3] {
            let x = contour_integral(&w.0, &w.1, &p1, opts.quadrature)?;
            let y = contour_integral(&w.0, &w.1, &p2, opts.quadrature)?;
            d = d.max((x - y).norm());
        }
        diffs.push(d);
    }
    let rep = ResidualReport::from_values("path-independence", &diffs, None, tol);
    let surf = induce_surface(s, opts)?;
    let pts: Vec<&Vector3<f64>> = (0..g.len()).filter(|&k| mask[k]).map(|k| &surf.immersion.points[k]).collect();
    let diam = bounding_diameter(&pts);
    Ok(if rep.max > 1e-4 * diam {
        rep.with_note("inexact closure")
    } else {
        rep
    })
}

fn bounding_diameter(pts: &[&Vector3<f64>]) -> f64 {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in pts.iter().filter(|p| p.iter().all(|x| x.is_finite())) {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

/// Left side of the quartic (X₁²+X₂²)² − (2 + (a²/4)e^{2X₃})(X₁²+X₂²)
/// + (a²/2)e^{2X₃}X₂ + 1 − (a²/4)e^{2X₃}.
pub fn quartic_lhs(x: &Vector3<f64>, a: f64) -> f64 {
    let r = x.x * x.x + x.y * x.y;
    let e = (2.0 * x.z).exp() * a * a;
    r * r - (2.0 + e / 4.0) * r + e / 2.0 * x.y + 1.0 - e / 4.0
}

fn quartic_grad(x: &Vector3<f64>, a: f64) -> Vector3<f64> {
    let r = x.x * x.x + x.y * x.y;
    let e = (2.0 * x.z).exp() * a * a;
    let dr = 2.0 * r - (2.0 + e / 4.0);
    Vector3::new(
        dr * 2.0 * x.x,
        dr * 2.0 * x.y + e / 2.0,
        -(e / 2.0) * r + e * x.y - e / 2.0,
    )
}

/// Outcome of the one-node positioning fit against the quartic.
#[derive(Clone, Debug, Serialize)]
pub struct QuarticFit {
    pub translation: [f64; 3],
    pub reference: (usize, usize),
    /// Fraction of kept nodes with |LHS| ≤ tolerance.
    pub fraction: f64,
    pub max_abs: f64,
    pub median_abs: f64,
    pub pass: bool,
}

/// Translates the surface so the reference node lands on the nearest point
/// of the quartic's zero set (Newton projection from the node), then
/// evaluates the quartic at every kept node.
pub fn quartic_fit(
    surface: &Immersion3,
    a: f64,
    reference: (usize, usize),
    mask: &[bool],
    tol: f64,
    min_fraction: f64,
) -> QuarticFit {
    let g = surface.grid;
    let x0 = surface.points[g.idx(reference.0, reference.1)];
    let mut y = x0;
    for _ in 0..100 {
        let f = quartic_lhs(&y, a);
        let gr = quartic_grad(&y, a);
        let n2 = gr.norm_squared();
        if n2 == 0.0 || f.abs() < 1e-15 {
            break;
        }
        y -= gr * (f / n2);
    }
    let t = y - x0;
    let mut vals: Vec<f64> =
        (0..g.len()).filter(|&k| mask[k]).map(|k| quartic_lhs(&(surface.points[k] + t), a).abs()).collect();
    let n = vals.len().max(1) as f64;
    let fraction = vals.iter().filter(|v| **v <= tol).count() as f64 / n;
    let max_abs = vals.iter().cloned().fold(0.0, f64::max);
    vals.sort_by(|x, y| x.total_cmp(y));
    let median_abs = vals.get(vals.len() / 2).copied().unwrap_or(0.0);
    QuarticFit { translation: [t.x, t.y, t.z], reference, fraction, max_abs, median_abs, pass: fraction >= min_fraction }
}

/// Checks of the induced mesh against the spinor data.
#[derive(Clone, Debug)]
pub struct MetricCheck {
    /// Mean and relative standard deviation of the mesh mean curvature.
    pub mean_h: f64,
    pub h_rel_std: ResidualReport,
    /// |F|/√(EG) (conformality).
    pub off_diagonal: ResidualReport,
    /// |E/G − 1|.
    pub isotropy: ResidualReport,
    /// |K_mesh − K_p| / max(|K_p|, 1) with K_p = −∂∂̄ ln p / p².
    pub gaussian: ResidualReport,
}

pub fn metric_check(surface: &Immersion3, s: &SpinorPair, mask: &[bool], tol: f64) -> WResult<MetricCheck> {
    let forms = fundamental_forms(surface, 1.0)?;
    let p = s.p();
    let lp = diff_zzbar(&p.map(f64::ln))?;
    let keep: Vec<bool> = (0..mask.len()).map(|k| mask[k] && !forms.singular[k]).collect();
    let hs: Vec<f64> = (0..mask.len()).filter(|&k| keep[k]).map(|k| forms.H.data[k]).collect();
    let n = hs.len().max(1) as f64;
    let mean = hs.iter().sum::<f64>() / n;
    let sd = (hs.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n).sqrt();
    let rel = if mean != 0.0 { sd / mean.abs() } else { f64::INFINITY };
    let off: Vec<f64> = (0..mask.len())
        .map(|k| forms.F.data[k].abs() / (forms.E.data[k] * forms.G.data[k]).sqrt())
        .collect();
    let iso: Vec<f64> = (0..mask.len()).map(|k| (forms.E.data[k] / forms.G.data[k] - 1.0).abs()).collect();
    let kerr: Vec<f64> = (0..mask.len())
        .map(|k| {
            let kp = -lp.data[k] / p.data[k].powi(2);
            (forms.K.data[k] - kp).abs() / kp.abs().max(1.0)
        })
        .collect();
    Ok(MetricCheck {
        mean_h: mean,
        h_rel_std: ResidualReport::scalar("mean-curvature-rel-std", rel, tol).with_note(format!("mean H = {mean}")),
        off_diagonal: ResidualReport::from_values("conformal-off-diagonal", &off, Some(&keep), tol),
        isotropy: ResidualReport::from_values("conformal-isotropy", &iso, Some(&keep), tol),
        gaussian: ResidualReport::from_values("gaussian-vs-p", &kerr, Some(&keep), 1e-2),
    })
}

/// S = (1/(1+|ρ|²)) [[1 − |ρ|², 2ρ̄], [2ρ, −1 + |ρ|²]].
pub fn spin_matrix(sigma: &SigmaField) -> Field<Mat2> {
    sigma.rho.map(|r| {
        let q = 1.0 + r.norm_sqr();
        let d = C64::new((1.0 - r.norm_sqr()) / q, 0.0);
        Mat2(Matrix2::new(d, r.conj() * (2.0 / q), r * (2.0 / q), -d))
    })
}

/// Landau–Lifshitz residuals of the spin matrix.
#[derive(Clone, Debug)]
pub struct LandauLifshitz {
    /// max‖[S, ∂∂̄S]‖ (constant H) or ‖[S, ∂∂̄S] + ℛℋ‖ (nonconstant H).
    pub residual: ResidualReport,
    /// ‖[S, ∂∂̄S] − closed form in f, f̄‖ with the corrected off-diagonal
    /// entries ρ̄²f + f̄ and −(ρ²f̄ + f).
    pub closed_form: ResidualReport,
    /// max(|tr S|, ‖S² − I‖).
    pub algebraic: ResidualReport,
}

/// ℛ and ℋ for a nonconstant H.
pub fn ll_forcing(sigma: &SigmaField, h: &MeanCurvatureField) -> Field<Mat2> {
    let g = sigma.grid();
    Field {
        grid: g,
        data: (0..g.len())
            .map(|k| {
                let r = sigma.rho.data[k];
                let q = 1.0 + r.norm_sqr();
                let (d, dbb) = (sigma.d_rho.data[k], sigma.d_rho.data[k].conj());
                let rm = Matrix2::new(-r.conj() * d, r * dbb, d, -r * r * dbb) * C64::new(4.0 / (q * q), 0.0);
                let dl = h.dz_ln_h.data[k];
                let dbl = dl.conj();
                let hm = Matrix2::new(dbl, r.conj() * dbl, dl, dl / r);
                Mat2(rm * hm)
            })
            .collect(),
    }
}

pub fn ll_residual(
    sigma: &SigmaField,
    h: Option<&MeanCurvatureField>,
    mask: &[bool],
    tol: f64,
) -> WResult<LandauLifshitz> {
    let s = spin_matrix(sigma);
    let lap = diff_zzbar(&s)?;
    let g = sigma.grid();
    let comm: Vec<Mat2> = (0..g.len()).map(|k| s.data[k].commutator(lap.data[k])).collect();
    let mut m = mask.to_vec();
    let forcing = h.filter(|h| !h.is_constant()).map(|h| ll_forcing(sigma, h));
    if forcing.is_some() {
        for (k, keep) in m.iter_mut().enumerate() {
            *keep &= sigma.rho.data[k].norm() > 0.0;
        }
    }
    let r: Vec<f64> = (0..g.len())
        .map(|k| match &forcing {
            Some(f) => (comm[k].0 + f.data[k].0).norm(),
            None => comm[k].0.norm(),
        })
        .collect();
    let f = sigma_operator(sigma)?;
    let closed: Vec<f64> = (0..g.len())
        .map(|k| {
            let (rr, ff) = (sigma.rho.data[k], f.data[k]);
            let (rb, fb) = (rr.conj(), ff.conj());
            let q = 1.0 + rr.norm_sqr();
            let c = Matrix2::new(rb * ff - rr * fb, rb * rb * ff + fb, -(rr * rr * fb + ff), rr * fb - rb * ff)
                * C64::new(4.0 / (q * q), 0.0);
            (comm[k].0 - c).norm()
        })
        .collect();
    let alg: Vec<f64> = s
        .data
        .iter()
        .map(|m| {
            let tr = (m.0[(0, 0)] + m.0[(1, 1)]).norm();
            tr.max((m.0 * m.0 - Matrix2::identity()).norm())
        })
        .collect();
    let name = if forcing.is_some() { "landau-lifshitz-forced" } else { "landau-lifshitz" };
    Ok(LandauLifshitz {
        residual: ResidualReport::from_values(name, &r, Some(&m), tol),
        closed_form: ResidualReport::from_values("spin-commutator-closed-form", &closed, Some(mask), tol),
        algebraic: ResidualReport::from_values("spin-algebra", &alg, None, 1e-12),
    })
}

/// Manufactured nonconstant-H pair: H = 1 + ¼tanh x and
/// ρ = e^{ic} tan(κ(φ(x) + d)) with φ = x + ¼ ln cosh x (so φ′ = H),
/// which solves the forced sigma model exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedPair {
    pub kappa: f64,
    pub d: f64,
    pub c: f64,
}

impl Default for ManufacturedPair {
    fn default() -> Self {
        Self { kappa: 0.3, d: 1.0, c: 0.7 }
    }
}

impl ManufacturedPair {
    pub fn h(&self, grid: Grid2) -> WResult<MeanCurvatureField> {
        let h = Field::from_fn(grid, |x, _| 1.0 + 0.25 * x.tanh());
        // ∂ = ½∂_x for functions of x alone.
        let d = Field::from_fn(grid, |x, _| {
            let hx = 0.25 / x.cosh().powi(2);
            C64::new(0.5 * hx / (1.0 + 0.25 * x.tanh()), 0.0)
        });
        MeanCurvatureField::with_derivative(h, d)
    }

    pub fn sigma(&self, grid: Grid2) -> WResult<SigmaField> {
        let ph = C64::from_polar(1.0, self.c);
        let ang = move |x: f64| self.kappa * (x + 0.25 * x.cosh().ln() + self.d);
        let rho = Field::from_fn(grid, |x, _| ph * ang(x).tan());
        let rx = Field::from_fn(grid, |x, _| ph * (self.kappa * (1.0 + 0.25 * x.tanh()) / ang(x).cos().powi(2)));
        let half = rx.map(|v| v * 0.5);
        SigmaField::with_derivatives(rho, half.clone(), half)
    }
}
