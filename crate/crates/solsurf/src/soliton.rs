//! Sym-type immersions built from the sine-Gordon SU(2) Lax pair, their
//! curvature and Euler characteristic, and the SO(3) / SO(2,1) Gauss-equation
//! reductions.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{
    integrate_frame_with, sym_immersion, AlgebraMatrix, AlgebraTag, FrameError, FrameSolution, Mat2, Mat3,
    MatrixField, PauliBasis,
};
use crate::geometry::{fundamental_forms, FormField, Immersion3};
use crate::numerics::{
    diff_u, diff_uv, diff_v, interior_mask, Field, Grid2, Midpoint, NumError, ResidualReport, ScalarField, C64,
};

#[derive(Debug, Error)]
pub enum SolitonError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("spectral parameter must be nonzero")]
    ZeroLambda,
}

pub type SolitonResult<T> = Result<T, SolitonError>;

/// ϑ with its first derivatives and the spectral parameter λ.
#[derive(Clone, Debug, PartialEq)]
pub struct SGLaxData {
    pub theta: ScalarField,
    pub theta_u: ScalarField,
    pub theta_v: ScalarField,
    pub lambda: f64,
}

impl SGLaxData {
    /// Derivatives by finite differences.
    pub fn new(theta: ScalarField, lambda: f64) -> SolitonResult<Self> {
        let theta_u = diff_u(&theta)?;
        let theta_v = diff_v(&theta)?;
        Self::with_derivatives(theta, theta_u, theta_v, lambda)
    }

    pub fn with_derivatives(
        theta: ScalarField,
        theta_u: ScalarField,
        theta_v: ScalarField,
        lambda: f64,
    ) -> SolitonResult<Self> {
        if lambda == 0.0 {
            return Err(SolitonError::ZeroLambda);
        }
        if theta_u.grid != theta.grid || theta_v.grid != theta.grid {
            return Err(NumError::GridMismatch.into());
        }
        Ok(Self { theta, theta_u, theta_v, lambda })
    }

    /// The kink 4·arctan(exp(a·u + v/a)) with analytic derivatives.
    pub fn kink(grid: Grid2, a: f64, lambda: f64) -> SolitonResult<Self> {
        let s = |u: f64, v: f64| a * u + v / a;
        let theta = Field::from_fn(grid, |u, v| 4.0 * s(u, v).exp().atan());
        let theta_u = Field::from_fn(grid, |u, v| 2.0 * a / s(u, v).cosh());
        let theta_v = Field::from_fn(grid, |u, v| 2.0 / (a * s(u, v).cosh()));
        Self::with_derivatives(theta, theta_u, theta_v, lambda)
    }

    pub fn grid(&self) -> Grid2 {
        self.theta.grid
    }

    /// U = (i/2)(−ϑ_u σ₁ + λσ₃), V = (i/2λ)(sin ϑ σ₂ − cos ϑ σ₃).
    pub fn lax_pair(&self) -> SolitonResult<(MatrixField<Mat2>, MatrixField<Mat2>)> {
        let p = PauliBasis::new();
        let h = C64::new(0.0, 0.5);
        let r = |x: f64| C64::new(x, 0.0);
        let grid = self.grid();
        let lam = self.lambda;
        let u: Vec<Mat2> =
            self.theta_u.data.iter().map(|&tu| Mat2((p.s1 * r(-tu) + p.s3 * r(lam)) * h)).collect();
        let v: Vec<Mat2> = self
            .theta
            .data
            .iter()
            .map(|&t| Mat2((p.s2 * r(t.sin()) - p.s3 * r(t.cos())) * (h / lam)))
            .collect();
        Ok((
            MatrixField::new(AlgebraTag::Su2, Field { grid, data: u })?,
            MatrixField::new(AlgebraTag::Su2, Field { grid, data: v })?,
        ))
    }

    /// |ϑ_uv − sin ϑ| with ϑ_uv = ∂_v ϑ_u by finite differences.
    pub fn sg_residual(&self, rings: usize, tol: f64) -> SolitonResult<ResidualReport> {
        let tuv = diff_v(&self.theta_u)?;
        let r: Vec<f64> = tuv.data.iter().zip(&self.theta.data).map(|(a, t)| a - t.sin()).collect();
        Ok(ResidualReport::from_values("sine-gordon", &r, Some(&interior_mask(&self.grid(), rings)), tol))
    }
}

/// A symmetry φ of ϑ_uv = sin ϑ, i.e. a solution of φ_uv = φ cos ϑ.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryField {
    pub phi: ScalarField,
    pub phi_u: ScalarField,
    /// |φ_uv − φ cos ϑ| as measured at construction.
    pub residual: ResidualReport,
}

impl SymmetryField {
    pub fn new(phi: ScalarField, data: &SGLaxData) -> SolitonResult<Self> {
        let phi_u = diff_u(&phi)?;
        Self::with_derivative(phi, phi_u, data)
    }

    pub fn with_derivative(phi: ScalarField, phi_u: ScalarField, data: &SGLaxData) -> SolitonResult<Self> {
        if phi.grid != data.grid() || phi_u.grid != phi.grid {
            return Err(NumError::GridMismatch.into());
        }
        let puv = diff_v(&phi_u)?;
        let r: Vec<f64> = (0..phi.data.len()).map(|k| puv.data[k] - phi.data[k] * data.theta.data[k].cos()).collect();
        let residual = ResidualReport::from_values("symmetry", &r, None, 1e-4);
        Ok(Self { phi, phi_u, residual })
    }

    /// φ = ϑ_v (using the stored derivatives; φ_u = sin ϑ on shell).
    pub fn theta_v(data: &SGLaxData) -> SolitonResult<Self> {
        let phi_u = data.theta.map(f64::sin);
        Self::with_derivative(data.theta_v.clone(), phi_u, data)
    }

    /// Multiplies φ by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            phi: self.phi.map(|x| c * x),
            phi_u: self.phi_u.map(|x| c * x),
            residual: self.residual.clone(),
        }
    }
}

/// Output of [`sg_surface`].
#[derive(Clone, Debug)]
pub struct SgSurface {
    pub immersion: Immersion3,
    /// Closed-form I, II, K, H, with II and H taken relative to the mesh
    /// normal (F_u × F_v)/|F_u × F_v| so they compare directly with
    /// `fundamental_forms(immersion, 1.0)`.
    pub closed: FormField,
    /// Sign s = sgn(φφ_u/λ) relating the mesh normal to the frame normal
    /// Φ⁻¹(sin ϑ e₂ − cos ϑ e₃)Φ; 0 where φφ_u = 0.
    pub orientation: ScalarField,
    pub frame: FrameSolution<Mat2>,
    pub immersion_cross_order: ResidualReport,
    /// Failed preconditions (reported, not fatal).
    pub warnings: Vec<String>,
}

/// A = −(i/2)φ_u σ₁ and B = (i/2λ)φ(cos ϑ σ₂ + sin ϑ σ₃).
pub fn sym_generators_sg(data: &SGLaxData, sym: &SymmetryField) -> SolitonResult<(MatrixField<Mat2>, MatrixField<Mat2>)> {
    let p = PauliBasis::new();
    let h = C64::new(0.0, 0.5);
    let r = |x: f64| C64::new(x, 0.0);
    let grid = data.grid();
    let lam = data.lambda;
    let a: Vec<Mat2> = sym.phi_u.data.iter().map(|&pu| Mat2(p.s1 * (-h * pu))).collect();
    let b: Vec<Mat2> = (0..grid.len())
        .map(|k| {
            let t = data.theta.data[k];
            Mat2((p.s2 * r(t.cos()) + p.s3 * r(t.sin())) * (h * (sym.phi.data[k] / lam)))
        })
        .collect();
    Ok((
        MatrixField::new(AlgebraTag::Su2, Field { grid, data: a })?,
        MatrixField::new(AlgebraTag::Su2, Field { grid, data: b })?,
    ))
}

/// Converts an su(2) field F = −iF_jσ_j to points (F₁, F₂, F₃).
pub fn su2_to_immersion(f: &Field<Mat2>) -> Immersion3 {
    let p = PauliBasis::new();
    Immersion3 {
        grid: f.grid,
        points: f.data.iter().map(|m| Vector3::from(p.vector_from_su2(m))).collect(),
    }
}

/// Closed-form fundamental forms I = ¼(φ_u² du² + φ²/λ² dv²),
/// II = ½(λφ_u sin ϑ du² + φϑ_v/λ dv²) relative to the frame normal.
pub fn sg_closed_forms(data: &SGLaxData, sym: &SymmetryField) -> SolitonResult<FormField> {
    let lam = data.lambda;
    let g = data.grid();
    let n = g.len();
    let f = |v: Vec<f64>| Field { grid: g, data: v };
    let (phi, pu, th, tv) = (&sym.phi.data, &sym.phi_u.data, &data.theta.data, &data.theta_v.data);
    let forms = FormField::from_coefficients(
        f((0..n).map(|k| 0.25 * pu[k] * pu[k]).collect()),
        f(vec![0.0; n]),
        f((0..n).map(|k| 0.25 * phi[k] * phi[k] / (lam * lam)).collect()),
        f((0..n).map(|k| 0.5 * lam * pu[k] * th[k].sin()).collect()),
        f(vec![0.0; n]),
        f((0..n).map(|k| 0.5 * phi[k] * tv[k] / lam).collect()),
    )?;
    Ok(forms)
}

/// Closed-form K = 4λ²ϑ_v sin ϑ/(φφ_u) and the printed (full-trace)
/// H = 2λ(φ_uϑ_v + φ sin ϑ)/(φφ_u), both relative to the frame normal.
pub fn sg_closed_curvatures(data: &SGLaxData, sym: &SymmetryField) -> (ScalarField, ScalarField) {
    let lam = data.lambda;
    let g = data.grid();
    let (phi, pu, th, tv) = (&sym.phi.data, &sym.phi_u.data, &data.theta.data, &data.theta_v.data);
    let k = (0..g.len()).map(|k| 4.0 * lam * lam * tv[k] * th[k].sin() / (phi[k] * pu[k])).collect();
    let h = (0..g.len()).map(|k| 2.0 * lam * (pu[k] * tv[k] + phi[k] * th[k].sin()) / (phi[k] * pu[k])).collect();
    (Field { grid: g, data: k }, Field { grid: g, data: h })
}

/// Sym immersion with Φ(u_min, v_min) = I.
pub fn sg_surface(data: &SGLaxData, sym: &SymmetryField) -> SolitonResult<SgSurface> {
    sg_surface_with_initial(data, sym, Mat2::identity())
}

/// Integrates the frame from `initial`, then F_u = Φ⁻¹AΦ, F_v = Φ⁻¹BΦ.
pub fn sg_surface_with_initial(data: &SGLaxData, sym: &SymmetryField, initial: Mat2) -> SolitonResult<SgSurface> {
    let mut warnings = Vec::new();
    let sg = data.sg_residual(1, 1e-4)?;
    if !sg.pass {
        warnings.push(format!("sine-Gordon residual {:e} above 1e-4", sg.max));
    }
    if !sym.residual.pass {
        warnings.push(format!("symmetry residual {:e} above 1e-4", sym.residual.max));
    }
    let (u, v) = data.lax_pair()?;
    let frame = integrate_frame_with(&u, &v, initial, 1e-5, Midpoint::Cubic)?;
    warnings.extend(frame.warnings.iter().cloned());
    let (a, b) = sym_generators_sg(data, sym)?;
    let (f, immersion_cross_order) = sym_immersion(&frame.phi, &a, &b, 1e-5)?;
    let immersion = su2_to_immersion(&f);
    let raw = sg_closed_forms(data, sym)?;
    let s: Vec<f64> = (0..raw.grid.len())
        .map(|k| {
            let x = sym.phi.data[k] * sym.phi_u.data[k] / data.lambda;
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    let signed = |f: &ScalarField| Field { grid: f.grid, data: f.data.iter().zip(&s).map(|(a, b)| a * b).collect() };
    let mut closed = FormField::from_coefficients(
        raw.E.clone(),
        raw.F.clone(),
        raw.G.clone(),
        signed(&raw.e),
        signed(&raw.f),
        signed(&raw.g),
    )?;
    for (k, x) in s.iter().enumerate() {
        if *x == 0.0 {
            closed.singular[k] = true;
        }
    }
    Ok(SgSurface {
        immersion,
        closed,
        orientation: Field { grid: raw.grid, data: s },
        frame,
        immersion_cross_order,
        warnings,
    })
}

/// F = Φ⁻¹Φ′(φ) with the Fréchet derivative taken by central differences
/// over ϑ ± εφ (frames integrated from I).
pub fn frechet_immersion(data: &SGLaxData, sym: &SymmetryField, eps: f64) -> SolitonResult<Field<Mat2>> {
    let shift = |sgn: f64| -> SolitonResult<Field<Mat2>> {
        let th = data.theta.zip_map(&sym.phi, |t, p| t + sgn * eps * p)?;
        let tu = data.theta_u.zip_map(&sym.phi_u, |t, p| t + sgn * eps * p)?;
        let d = SGLaxData::with_derivatives(th, tu, data.theta_v.clone(), data.lambda)?;
        let (u, v) = d.lax_pair()?;
        Ok(integrate_frame_with(&u, &v, Mat2::identity(), f64::INFINITY, Midpoint::Cubic)?.phi)
    };
    let (u, v) = data.lax_pair()?;
    let phi = integrate_frame_with(&u, &v, Mat2::identity(), f64::INFINITY, Midpoint::Cubic)?.phi;
    let (p, m) = (shift(1.0)?, shift(-1.0)?);
    let data = (0..phi.data.len())
        .map(|k| {
            let inv = Mat2(phi.data[k].0.adjoint());
            inv * ((p.data[k] - m.data[k]) / (2.0 * eps))
        })
        .collect();
    Ok(Field { grid: phi.grid, data })
}

/// Euler-characteristic report.
#[derive(Clone, Debug, Serialize)]
pub struct EulerReport {
    /// (1/2π)∬λϑ_v sin ϑ du dv over the grid (trapezoid).
    pub chi_formula: f64,
    /// (1/2π)∬√g K du dv from finite-difference forms of the mesh.
    pub chi_mesh: f64,
    /// Largest angular hole of the image seen from its centroid, as a
    /// fraction of π.
    pub closure_gap: f64,
    /// Fraction of parameter area excluded as singular in `chi_mesh`.
    pub excluded_fraction: f64,
    pub warnings: Vec<String>,
}

fn trapezoid_weights(grid: &Grid2) -> impl Fn(usize) -> f64 + '_ {
    move |k| {
        let (i, j) = grid.ij(k);
        let wi = if i == 0 || i == grid.nu - 1 { 0.5 } else { 1.0 };
        let wj = if j == 0 || j == grid.nv - 1 { 0.5 } else { 1.0 };
        wi * wj * grid.hu() * grid.hv()
    }
}

/// Largest angular gap (fraction of π) between `directions` sample points
/// on the unit sphere and the unit vectors from the centroid to `points`.
pub fn closure_gap(points: &[Vector3<f64>], samples: usize) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    let c = points.iter().fold(Vector3::zeros(), |a, p| a + p) / points.len() as f64;
    let dirs: Vec<Vector3<f64>> = points.iter().filter_map(|p| (p - c).try_normalize(1e-14)).collect();
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let z = 1.0 - 2.0 * (k as f64 + 0.5) / samples as f64;
        let r = (1.0 - z * z).sqrt();
        let ang = golden * k as f64;
        let d = Vector3::new(r * ang.cos(), r * ang.sin(), z);
        let best = dirs.iter().map(|q| q.dot(&d)).fold(-1.0, f64::max);
        worst = worst.max(best.clamp(-1.0, 1.0).acos());
    }
    worst / std::f64::consts::PI
}

/// χ by the closed-form integrand and by mesh curvature on the grid domain.
pub fn euler_characteristic(data: &SGLaxData, sym: &SymmetryField, surface: &SgSurface) -> SolitonResult<EulerReport> {
    let grid = data.grid();
    let w = trapezoid_weights(&grid);
    let two_pi = 2.0 * std::f64::consts::PI;
    let chi_formula = (0..grid.len())
        .map(|k| w(k) * data.lambda * data.theta_v.data[k] * data.theta.data[k].sin())
        .sum::<f64>()
        / two_pi;
    let _ = sym;
    let forms = fundamental_forms(&surface.immersion, 1.0)?;
    let (mut acc, mut excluded, mut total) = (0.0, 0.0, 0.0);
    for k in 0..grid.len() {
        total += w(k);
        let det = forms.E.data[k] * forms.G.data[k] - forms.F.data[k] * forms.F.data[k];
        if forms.singular[k] || surface.closed.singular[k] || !forms.K.data[k].is_finite() {
            excluded += w(k);
            continue;
        }
        acc += w(k) * det.max(0.0).sqrt() * forms.K.data[k];
    }
    let excluded_fraction = excluded / total;
    let mut warnings = Vec::new();
    if excluded_fraction > 0.05 {
        warnings.push(format!("excluded area fraction {excluded_fraction:.3} above 5%"));
    }
    Ok(EulerReport {
        chi_formula,
        chi_mesh: acc / two_pi,
        closure_gap: closure_gap(&surface.immersion.points, 2000),
        excluded_fraction,
        warnings,
    })
}

/// Node selection for [`sym_cross_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckOptions {
    /// Minimum Chebyshev distance (parameter units) from any node where the
    /// orientation sign changes or vanishes.
    pub margin: f64,
    /// Minimum closed-form area element √(EG − F²) as a fraction of its maximum.
    pub area_floor: f64,
    /// Boundary rings dropped.
    pub rings: usize,
}

impl Default for CrossCheckOptions {
    fn default() -> Self {
        Self { margin: 0.25, area_floor: 1e-3, rings: 2 }
    }
}

/// Sliding-window min and max of `x` over a (2m+1)² box.
fn box_extrema(grid: &Grid2, x: &[f64], mu: usize, mv: usize) -> (Vec<f64>, Vec<f64>) {
    let pass = |src: &[f64], along_u: bool, m: usize, take_max: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for k in 0..src.len() {
            let (i, j) = grid.ij(k);
            let (c, n) = if along_u { (i, grid.nu) } else { (j, grid.nv) };
            let lo = c.saturating_sub(m);
            let hi = (c + m).min(n - 1);
            let mut acc = if take_max { f64::NEG_INFINITY } else { f64::INFINITY };
            for q in lo..=hi {
                let kk = if along_u { grid.idx(q, j) } else { grid.idx(i, q) };
                acc = if take_max { acc.max(src[kk]) } else { acc.min(src[kk]) };
            }
            out[k] = acc;
        }
        out
    };
    let lo = pass(&pass(x, true, mu, false), false, mv, false);
    let hi = pass(&pass(x, true, mu, true), false, mv, true);
    (lo, hi)
}

/// Nodes used for the mesh against closed-form comparison.
pub fn cross_check_mask(surface: &SgSurface, opts: &CrossCheckOptions) -> Vec<bool> {
    let grid = surface.closed.grid;
    let mu = (opts.margin / grid.hu()).ceil() as usize;
    let mv = (opts.margin / grid.hv()).ceil() as usize;
    let (lo, hi) = box_extrema(&grid, &surface.orientation.data, mu, mv);
    let c = &surface.closed;
    let area: Vec<f64> = (0..grid.len())
        .map(|k| (c.E.data[k] * c.G.data[k] - c.F.data[k] * c.F.data[k]).max(0.0).sqrt())
        .collect();
    let amax = area.iter().cloned().fold(0.0, f64::max);
    let ring = interior_mask(&grid, opts.rings);
    (0..grid.len())
        .map(|k| ring[k] && lo[k] == hi[k] && lo[k] != 0.0 && !c.singular[k] && area[k] >= opts.area_floor * amax)
        .collect()
}

/// Mesh against closed-form comparison of one Sym surface.
#[derive(Clone, Debug)]
pub struct SurfaceCrossCheck {
    /// Node-wise |I_mesh − I|_F / |I|_F.
    pub first_form: ResidualReport,
    /// Node-wise |II_mesh − II|_F / |II|_F.
    pub second_form: ResidualReport,
    pub gaussian: ResidualReport,
    pub mean: ResidualReport,
    /// |s·√g·K_mesh − λϑ_v sin ϑ| (absolute).
    pub integrand: ResidualReport,
    pub mask: Vec<bool>,
}

/// Compares `fundamental_forms(immersion, +1)` with the oriented closed forms.
pub fn sym_cross_check(
    data: &SGLaxData,
    surface: &SgSurface,
    opts: &CrossCheckOptions,
    rel_tol: f64,
    integrand_tol: f64,
) -> SolitonResult<SurfaceCrossCheck> {
    let mesh = fundamental_forms(&surface.immersion, 1.0)?;
    let c = &surface.closed;
    let mut mask = cross_check_mask(surface, opts);
    for (k, m) in mask.iter_mut().enumerate() {
        *m &= !mesh.singular[k];
    }
    let n = mask.len();
    let frob = |a: [&ScalarField; 3], b: [&ScalarField; 3]| -> Vec<f64> {
        (0..n)
            .map(|k| {
                let d = (a[0].data[k] - b[0].data[k]).powi(2)
                    + 2.0 * (a[1].data[k] - b[1].data[k]).powi(2)
                    + (a[2].data[k] - b[2].data[k]).powi(2);
                let r = b[0].data[k].powi(2) + 2.0 * b[1].data[k].powi(2) + b[2].data[k].powi(2);
                (d / r).sqrt()
            })
            .collect()
    };
    let rel = |a: &ScalarField, b: &ScalarField| -> Vec<f64> {
        (0..n).map(|k| (a.data[k] - b.data[k]).abs() / b.data[k].abs()).collect()
    };
    let integrand: Vec<f64> = (0..n)
        .map(|k| {
            let det = mesh.E.data[k] * mesh.G.data[k] - mesh.F.data[k] * mesh.F.data[k];
            surface.orientation.data[k] * det.max(0.0).sqrt() * mesh.K.data[k]
                - data.lambda * data.theta_v.data[k] * data.theta.data[k].sin()
        })
        .collect();
    let m = Some(mask.as_slice());
    Ok(SurfaceCrossCheck {
        first_form: ResidualReport::from_values("first-form", &frob([&mesh.E, &mesh.F, &mesh.G], [&c.E, &c.F, &c.G]), m, rel_tol),
        second_form: ResidualReport::from_values("second-form", &frob([&mesh.e, &mesh.f, &mesh.g], [&c.e, &c.f, &c.g]), m, rel_tol),
        gaussian: ResidualReport::from_values("gaussian-curvature", &rel(&mesh.K, &c.K), m, rel_tol),
        mean: ResidualReport::from_values("mean-curvature", &rel(&mesh.H, &c.H), m, rel_tol),
        integrand: ResidualReport::from_values("area-integrand", &integrand, m, integrand_tol),
        mask,
    })
}

/// Sign pattern of the 3×3 Lax matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    So3,
    So21,
}

/// Given entries u12, u13, v12, v13 on a grid with u ↔ x and v ↔ t.
#[derive(Clone, Debug, PartialEq)]
pub struct So3Coefficients {
    pub u12: ScalarField,
    pub u13: ScalarField,
    pub v12: ScalarField,
    pub v13: ScalarField,
}

/// Diagonal substitutions u13 = v12 = 0 in terms of a scalar φ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Substitution {
    /// u12 = cos(φ/2), v13 = sin(φ/2).
    Circular,
    /// u12 = cosh(φ/2), v13 = sinh(φ/2).
    Hyperbolic,
    /// u12 = v13 = e^φ.
    Exponential,
}

/// Nodes with |u12·v13 − u13·v12| below this are excluded.
pub const RANK_EPS: f64 = 1e-10;

impl So3Coefficients {
    /// u13 = v12 = 0 with the given u12, v13.
    pub fn diagonal(u12: ScalarField, v13: ScalarField) -> Self {
        let z = Field::constant(u12.grid, 0.0);
        Self { u12, u13: z.clone(), v12: z, v13 }
    }

    pub fn substitute(kind: Substitution, phi: &ScalarField) -> Self {
        let (p, q): (fn(f64) -> f64, fn(f64) -> f64) = match kind {
            Substitution::Circular => (|x| (x / 2.0).cos(), |x| (x / 2.0).sin()),
            Substitution::Hyperbolic => (|x| (x / 2.0).cosh(), |x| (x / 2.0).sinh()),
            Substitution::Exponential => (f64::exp, f64::exp),
        };
        Self::diagonal(phi.map(p), phi.map(q))
    }

    pub fn grid(&self) -> Grid2 {
        self.u12.grid
    }

    /// D = u12·v13 − u13·v12.
    pub fn determinant(&self) -> ScalarField {
        let g = self.grid();
        Field {
            grid: g,
            data: (0..g.len())
                .map(|k| self.u12.data[k] * self.v13.data[k] - self.u13.data[k] * self.v12.data[k])
                .collect(),
        }
    }

    /// u23, v23 from the first two compatibility equations, and the keep
    /// mask |D| ≥ [`RANK_EPS`].
    pub fn connection(&self) -> Result<(ScalarField, ScalarField, Vec<bool>), NumError> {
        let g = self.grid();
        let a = diff_v(&self.v12)?.zip_map(&diff_u(&self.u12)?, |x, y| x - y)?;
        let b = diff_v(&self.v13)?.zip_map(&diff_u(&self.u13)?, |x, y| x - y)?;
        let d = self.determinant();
        let keep: Vec<bool> = d.data.iter().map(|x| x.abs() >= RANK_EPS).collect();
        let mut u23 = Vec::with_capacity(g.len());
        let mut v23 = Vec::with_capacity(g.len());
        for k in 0..g.len() {
            let dk = if keep[k] { d.data[k] } else { f64::NAN };
            u23.push((a.data[k] * self.u12.data[k] + b.data[k] * self.u13.data[k]) / dk);
            v23.push((b.data[k] * self.v13.data[k] + a.data[k] * self.v12.data[k]) / dk);
        }
        Ok((Field { grid: g, data: u23 }, Field { grid: g, data: v23 }, keep))
    }

    /// The Lax matrices (U drives t, V drives x) with u23, v23 from
    /// [`Self::connection`].
    pub fn lax_matrices(&self, sig: Signature) -> SolitonResult<(MatrixField<Mat3>, MatrixField<Mat3>)> {
        let (u23, v23, _) = self.connection()?;
        let g = self.grid();
        let (tag, s) = match sig {
            Signature::So3 => (AlgebraTag::So3, -1.0),
            Signature::So21 => (AlgebraTag::So21, 1.0),
        };
        let build = |a: &ScalarField, b: &ScalarField, c: &ScalarField| -> Vec<Mat3> {
            (0..g.len())
                .map(|k| {
                    let (x, y, z) = (a.data[k], b.data[k], c.data[k]);
                    Mat3(Matrix3::new(0.0, x, y, s * x, 0.0, z, s * y, -z, 0.0))
                })
                .collect()
        };
        Ok((
            MatrixField::new(tag, Field { grid: g, data: build(&self.u12, &self.u13, &u23) })?,
            MatrixField::new(tag, Field { grid: g, data: build(&self.v12, &self.v13, &v23) })?,
        ))
    }

    /// First, second and third fundamental forms of the associated surface
    /// as (dt², dt dx, dx²) coefficient triples: I = ω₁² + ω₂²,
    /// II = ω₁ω₁₃ + ω₂ω₂₃, III = ω₁₃² + ω₂₃².
    pub fn structure_forms(&self) -> [Field<[f64; 3]>; 3] {
        let g = self.grid();
        let quad = |a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)| {
            [a.0 * b.0 + c.0 * d.0, 0.5 * (a.0 * b.1 + a.1 * b.0 + c.0 * d.1 + c.1 * d.0), a.1 * b.1 + c.1 * d.1]
        };
        let mk = |which: usize| Field {
            grid: g,
            data: (0..g.len())
                .map(|k| {
                    let w1 = (self.u12.data[k], self.v12.data[k]);
                    let w2 = (self.u13.data[k], self.v13.data[k]);
                    // ω₁₃ = ω₁ and ω₂₃ = ω₂ by construction.
                    let (w13, w23) = (w1, w2);
                    match which {
                        0 => quad(w1, w1, w2, w2),
                        1 => quad(w1, w13, w2, w23),
                        _ => quad(w13, w13, w23, w23),
                    }
                })
                .collect(),
        };
        [mk(0), mk(1), mk(2)]
    }
}

/// Gauss-equation residual and the three first-order component residuals.
#[derive(Clone, Debug)]
pub struct GaussReport {
    pub gauss: ResidualReport,
    pub components: [ResidualReport; 3],
    pub residual: ScalarField,
}

/// Second-order Gauss-equation residual u23_x − v23_t ∓ (u12v13 − u13v12)
/// (− for so3, + for so21), evaluated by finite differences over nodes with
/// |D| ≥ 1e−10 at least `rings` from the boundary.
pub fn so3_gauss_residual(c: &So3Coefficients, sig: Signature, rings: usize, tol: f64) -> SolitonResult<GaussReport> {
    let g = c.grid();
    let (u23, v23, keep) = c.connection()?;
    let (u23x, v23t) = (diff_u(&u23)?, diff_v(&v23)?);
    let d = c.determinant();
    let s = match sig {
        Signature::So3 => -1.0,
        Signature::So21 => 1.0,
    };
    let r3: Vec<f64> = (0..g.len()).map(|k| u23x.data[k] - v23t.data[k] + s * d.data[k]).collect();
    // A node is usable when it and its differencing stencil are rank-2.
    let mut mask = interior_mask(&g, rings);
    for k in 0..g.len() {
        let (i, j) = g.ij(k);
        let near = [(0i64, 0i64), (1, 0), (-1, 0), (0, 1), (0, -1)].iter().all(|&(di, dj)| {
            let (a, b) = (i as i64 + di, j as i64 + dj);
            a < 0 || b < 0 || a >= g.nu as i64 || b >= g.nv as i64 || keep[g.idx(a as usize, b as usize)]
        });
        mask[k] &= near;
    }
    let (u12x, v12t) = (diff_u(&c.u12)?, diff_v(&c.v12)?);
    let (u13x, v13t) = (diff_u(&c.u13)?, diff_v(&c.v13)?);
    let c1: Vec<f64> = (0..g.len())
        .map(|k| u12x.data[k] - v12t.data[k] + u23.data[k] * c.v13.data[k] - c.u13.data[k] * v23.data[k])
        .collect();
    let c2: Vec<f64> = (0..g.len())
        .map(|k| u13x.data[k] - v13t.data[k] + c.u12.data[k] * v23.data[k] - u23.data[k] * c.v12.data[k])
        .collect();
    let name = match sig {
        Signature::So3 => "gauss-so3",
        Signature::So21 => "gauss-so21",
    };
    Ok(GaussReport {
        gauss: ResidualReport::from_values(name, &r3, Some(&mask), tol),
        components: [
            ResidualReport::from_values("component-1", &c1, Some(&mask), tol),
            ResidualReport::from_values("component-2", &c2, Some(&mask), tol),
            ResidualReport::from_values("component-3", &r3, Some(&mask), tol),
        ],
        residual: Field { grid: g, data: r3 },
    })
}

/// Residual of the rank-1 conservation law u23_x − (σu23)_t, the
/// compatibility condition of the U(1) pair ψ_t = u23ψ, ψ_x = σu23ψ.
pub fn rank1_conservation_residual(u23: &ScalarField, sigma: &ScalarField, tol: f64) -> SolitonResult<ResidualReport> {
    let flux = sigma.zip_map(u23, |s, u| s * u)?;
    let r = diff_u(u23)?.zip_map(&diff_v(&flux)?, |a, b| a - b)?;
    Ok(ResidualReport::from_values("rank1-conservation", &r.data, None, tol))
}

/// ϑ_uv − sin ϑ by the mixed difference of ϑ itself.
pub fn sg_residual_of(theta: &ScalarField, rings: usize, tol: f64) -> SolitonResult<ResidualReport> {
    let r = diff_uv(theta)?.zip_map(theta, |a, t| a - t.sin())?;
    Ok(ResidualReport::from_values("sine-gordon", &r.data, Some(&interior_mask(&theta.grid, rings)), tol))
}
