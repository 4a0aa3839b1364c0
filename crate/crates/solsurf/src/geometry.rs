//! Classical surface theory from a sampled immersion: fundamental forms,
//! curvatures, Christoffel symbols and the Gauss / Mainardi–Codazzi
//! compatibility conditions.

use nalgebra::{Matrix3, Vector3};

use crate::numerics::{
    diff_u, diff_uu, diff_uv, diff_v, diff_vv, interior_mask, Field, Grid2, NumResult,
    ResidualReport, ScalarField,
};

/// Default regularity threshold on |r_u × r_v|.
pub const EPS_REG: f64 = 1e-10;

/// Grid of points in three-space.
#[derive(Clone, Debug, PartialEq)]
pub struct Immersion3 {
    pub grid: Grid2,
    pub points: Vec<Vector3<f64>>,
}

impl Immersion3 {
    pub fn new(grid: Grid2, points: Vec<Vector3<f64>>) -> NumResult<Self> {
        Field::from_vec(grid, points).map(|f| Self { grid: f.grid, points: f.data })
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> Vector3<f64>) -> Self {
        let p = Field::from_fn(grid, f);
        Self { grid, points: p.data }
    }

    /// Builds the immersion from three coordinate fields.
    pub fn from_components(x: &ScalarField, y: &ScalarField, z: &ScalarField) -> NumResult<Self> {
        let xy = x.zip_map(y, |a, b| (a, b))?;
        let p = xy.zip_map(z, |(a, b), c| Vector3::new(a, b, c))?;
        Ok(Self { grid: p.grid, points: p.data })
    }

    pub fn component(&self, c: usize) -> ScalarField {
        Field { grid: self.grid, data: self.points.iter().map(|p| p[c]).collect() }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Vector3<f64> {
        self.points[self.grid.idx(i, j)]
    }

    pub fn all_finite(&self) -> bool {
        self.points.iter().all(|p| p.iter().all(|x| x.is_finite()))
    }

    /// First partial derivatives r_u, r_v at every node.
    pub fn tangents(&self) -> NumResult<(Vec<Vector3<f64>>, Vec<Vector3<f64>>)> {
        let comps: Vec<ScalarField> = (0..3).map(|c| self.component(c)).collect();
        let du = comps.iter().map(diff_u).collect::<NumResult<Vec<_>>>()?;
        let dv = comps.iter().map(diff_v).collect::<NumResult<Vec<_>>>()?;
        let pack = |d: &[ScalarField]| -> Vec<Vector3<f64>> {
            (0..self.grid.len()).map(|k| Vector3::new(d[0].data[k], d[1].data[k], d[2].data[k])).collect()
        };
        Ok((pack(&du), pack(&dv)))
    }

    /// Per-node regularity flag |r_u × r_v| > eps.
    pub fn regular_mask(&self, eps: f64) -> NumResult<Vec<bool>> {
        let (ru, rv) = self.tangents()?;
        Ok(ru.iter().zip(&rv).map(|(a, b)| a.cross(b).norm() > eps).collect())
    }

    /// Applies x ↦ R x + t to every point.
    pub fn rigid_motion(&self, rot: &Matrix3<f64>, shift: &Vector3<f64>) -> Self {
        Self { grid: self.grid, points: self.points.iter().map(|p| rot * p + shift).collect() }
    }
}

/// First and second fundamental form coefficients with the derived
/// Gaussian curvature K = (eg − f²)/(EG − F²) and mean curvature
/// H = (eG − 2fF + gE)/(2(EG − F²)).
#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq)]
pub struct FormField {
    pub grid: Grid2,
    pub E: ScalarField,
    pub F: ScalarField,
    pub G: ScalarField,
    pub e: ScalarField,
    pub f: ScalarField,
    pub g: ScalarField,
    pub K: ScalarField,
    pub H: ScalarField,
    /// Nodes where the immersion is not regular or EG − F² ≤ 0.
    pub singular: Vec<bool>,
}

/// K and H from the six coefficients at one node.
#[allow(non_snake_case)]
pub fn curvatures(E: f64, F: f64, G: f64, e: f64, f: f64, g: f64) -> (f64, f64) {
    let w = E * G - F * F;
    ((e * g - f * f) / w, (e * G - 2.0 * f * F + g * E) / (2.0 * w))
}

impl FormField {
    /// Assembles a form field from its six coefficient fields; nodes with
    /// EG − F² ≤ 0 are marked singular.
    #[allow(non_snake_case)]
    pub fn from_coefficients(
        E: ScalarField,
        F: ScalarField,
        G: ScalarField,
        e: ScalarField,
        f: ScalarField,
        g: ScalarField,
    ) -> NumResult<Self> {
        let grid = E.grid;
        for x in [&F, &G, &e, &f, &g] {
            if x.grid != grid {
                return Err(crate::numerics::NumError::GridMismatch);
            }
        }
        let n = grid.len();
        let mut K = Vec::with_capacity(n);
        let mut H = Vec::with_capacity(n);
        let mut singular = Vec::with_capacity(n);
        for k in 0..n {
            let w = E.data[k] * G.data[k] - F.data[k] * F.data[k];
            let (kk, hh) = curvatures(E.data[k], F.data[k], G.data[k], e.data[k], f.data[k], g.data[k]);
            K.push(kk);
            H.push(hh);
            singular.push(!(w > 0.0) || !kk.is_finite());
        }
        Ok(Self {
            grid,
            E,
            F,
            G,
            e,
            f,
            g,
            K: Field { grid, data: K },
            H: Field { grid, data: H },
            singular,
        })
    }

    /// Keep-mask for residual statistics: non-singular nodes at least
    /// `rings` away from the boundary.
    pub fn keep_mask(&self, rings: usize) -> Vec<bool> {
        interior_mask(&self.grid, rings)
            .into_iter()
            .zip(&self.singular)
            .map(|(a, &s)| a && !s)
            .collect()
    }
}

/// Fundamental forms of a sampled immersion. The unit normal is
/// `normal_sign`·(r_u × r_v)/|r_u × r_v|; e = r_uu·N, f = r_uv·N, g = r_vv·N.
/// Nodes with |r_u × r_v| ≤ [`EPS_REG`] are marked singular.
pub fn fundamental_forms(surface: &Immersion3, normal_sign: f64) -> NumResult<FormField> {
    fundamental_forms_eps(surface, normal_sign, EPS_REG)
}

/// [`fundamental_forms`] with an explicit regularity threshold.
#[allow(non_snake_case)]
pub fn fundamental_forms_eps(surface: &Immersion3, normal_sign: f64, eps: f64) -> NumResult<FormField> {
    let grid = surface.grid;
    let comps: Vec<ScalarField> = (0..3).map(|c| surface.component(c)).collect();
    let d = |op: fn(&ScalarField) -> NumResult<ScalarField>| -> NumResult<Vec<ScalarField>> {
        comps.iter().map(op).collect()
    };
    let (ru, rv) = (d(diff_u)?, d(diff_v)?);
    let (ruu, ruv, rvv) = (d(diff_uu)?, d(diff_uv)?, d(diff_vv)?);
    let vec_at = |f: &[ScalarField], k: usize| Vector3::new(f[0].data[k], f[1].data[k], f[2].data[k]);
    let n = grid.len();
    let mut out: [Vec<f64>; 6] = Default::default();
    let mut irregular = vec![false; n];
    for k in 0..n {
        let a = vec_at(&ru, k);
        let b = vec_at(&rv, k);
        let c = a.cross(&b);
        let len = c.norm();
        irregular[k] = !(len > eps);
        let nn = c * (normal_sign / len);
        out[0].push(a.dot(&a));
        out[1].push(a.dot(&b));
        out[2].push(b.dot(&b));
        out[3].push(vec_at(&ruu, k).dot(&nn));
        out[4].push(vec_at(&ruv, k).dot(&nn));
        out[5].push(vec_at(&rvv, k).dot(&nn));
    }
    let [E, F, G, e, f, g] = out.map(|v| Field { grid, data: v });
    let mut forms = FormField::from_coefficients(E, F, G, e, f, g)?;
    for (s, irr) in forms.singular.iter_mut().zip(irregular) {
        *s |= irr;
    }
    Ok(forms)
}

/// Christoffel symbols of the second kind from E, F, G:
/// `[Γ¹₁₁, Γ²₁₁, Γ¹₁₂, Γ²₁₂, Γ¹₂₂, Γ²₂₂]`.
#[allow(non_snake_case)]
pub fn christoffels(forms: &FormField) -> NumResult<[ScalarField; 6]> {
    let (E, F, G) = (&forms.E, &forms.F, &forms.G);
    let (Eu, Ev) = (diff_u(E)?, diff_v(E)?);
    let (Fu, Fv) = (diff_u(F)?, diff_v(F)?);
    let (Gu, Gv) = (diff_u(G)?, diff_v(G)?);
    let grid = forms.grid;
    let mut out: [Vec<f64>; 6] = Default::default();
    for k in 0..grid.len() {
        let (e, f, g) = (E.data[k], F.data[k], G.data[k]);
        let w2 = 2.0 * (e * g - f * f);
        let (eu, ev, fu, fv, gu, gv) = (Eu.data[k], Ev.data[k], Fu.data[k], Fv.data[k], Gu.data[k], Gv.data[k]);
        out[0].push((g * eu - 2.0 * f * fu + f * ev) / w2);
        out[1].push((2.0 * e * fu - e * ev - f * eu) / w2);
        out[2].push((g * ev - f * gu) / w2);
        out[3].push((e * gu - f * ev) / w2);
        out[4].push((2.0 * g * fv - g * gu - f * gv) / w2);
        out[5].push((e * gv - 2.0 * f * fv + f * gu) / w2);
    }
    Ok(out.map(|v| Field { grid, data: v }))
}

/// Gaussian curvature from the first fundamental form alone (Brioschi's
/// formula), the intrinsic counterpart of K = (eg − f²)/(EG − F²).
#[allow(non_snake_case)]
pub fn intrinsic_curvature(forms: &FormField) -> NumResult<ScalarField> {
    let (E, F, G) = (&forms.E, &forms.F, &forms.G);
    let (Eu, Ev, Evv) = (diff_u(E)?, diff_v(E)?, diff_vv(E)?);
    let (Fu, Fv, Fuv) = (diff_u(F)?, diff_v(F)?, diff_uv(F)?);
    let (Gu, Gv, Guu) = (diff_u(G)?, diff_v(G)?, diff_uu(G)?);
    let grid = forms.grid;
    let data = (0..grid.len())
        .map(|k| {
            let (e, f, g) = (E.data[k], F.data[k], G.data[k]);
            let m1 = Matrix3::new(
                -0.5 * Evv.data[k] + Fuv.data[k] - 0.5 * Guu.data[k],
                0.5 * Eu.data[k],
                Fu.data[k] - 0.5 * Ev.data[k],
                Fv.data[k] - 0.5 * Gu.data[k],
                e,
                f,
                0.5 * Gv.data[k],
                f,
                g,
            );
            let m2 = Matrix3::new(0.0, 0.5 * Ev.data[k], 0.5 * Gu.data[k], 0.5 * Ev.data[k], e, f, 0.5 * Gu.data[k], f, g);
            let w = e * g - f * f;
            (m1.determinant() - m2.determinant()) / (w * w)
        })
        .collect();
    Ok(Field { grid, data })
}

/// The two Mainardi–Codazzi residual fields
/// e_v − f_u − (eΓ¹₁₂ + f(Γ²₁₂ − Γ¹₁₁) − gΓ²₁₁) and
/// f_v − g_u − (eΓ¹₂₂ + f(Γ²₂₂ − Γ¹₁₂) − gΓ²₁₂).
pub fn mainardi_codazzi_fields(forms: &FormField) -> NumResult<[ScalarField; 2]> {
    let [g111, g211, g112, g212, g122, g222] = christoffels(forms)?;
    let (ev, fu) = (diff_v(&forms.e)?, diff_u(&forms.f)?);
    let (fv, gu) = (diff_v(&forms.f)?, diff_u(&forms.g)?);
    let grid = forms.grid;
    let mut r1 = Vec::with_capacity(grid.len());
    let mut r2 = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (e, f, g) = (forms.e.data[k], forms.f.data[k], forms.g.data[k]);
        r1.push(ev.data[k] - fu.data[k] - (e * g112.data[k] + f * (g212.data[k] - g111.data[k]) - g * g211.data[k]));
        r2.push(fv.data[k] - gu.data[k] - (e * g122.data[k] + f * (g222.data[k] - g112.data[k]) - g * g212.data[k]));
    }
    Ok([Field { grid, data: r1 }, Field { grid, data: r2 }])
}

/// Both Mainardi–Codazzi residuals as reports over non-singular nodes at
/// least `rings` away from the boundary.
pub fn mainardi_codazzi_residual(forms: &FormField, rings: usize, tol: f64) -> NumResult<[ResidualReport; 2]> {
    let [r1, r2] = mainardi_codazzi_fields(forms)?;
    let keep = forms.keep_mask(rings);
    Ok([
        ResidualReport::from_values("mainardi-codazzi-1", &r1.data, Some(&keep), tol),
        ResidualReport::from_values("mainardi-codazzi-2", &r2.data, Some(&keep), tol),
    ])
}

/// Outcome of [`check_pseudospherical`].
#[derive(Clone, Debug)]
pub struct PseudosphericalCheck {
    pub forms: FormField,
    pub codazzi: [ResidualReport; 2],
    /// Intrinsic (Brioschi) minus extrinsic Gaussian curvature.
    pub gauss: ResidualReport,
    /// |ω_uv − sin ω / ρ²|.
    pub sine_gordon: ResidualReport,
    /// True when sin ω vanishes at every node, so II ≡ 0.
    pub degenerate_second_form: bool,
}

/// |sin ω| below which the pseudospherical metric counts as degenerate.
pub const SINGULAR_SIN: f64 = 1e-2;

/// Builds I = du² + 2cos ω du dv + dv², II = (2/ρ) sin ω du dv and checks
/// the compatibility conditions together with ω_uv = sin ω / ρ².
pub fn check_pseudospherical(omega: &ScalarField, rho: f64, tol: f64) -> NumResult<PseudosphericalCheck> {
    let grid = omega.grid;
    let one = Field::constant(grid, 1.0);
    let zero = Field::constant(grid, 0.0);
    let forms = FormField::from_coefficients(
        one.clone(),
        omega.map(f64::cos),
        one,
        zero.clone(),
        omega.map(|w| w.sin() / rho),
        zero,
    )?;
    let degenerate = omega.data.iter().all(|w| w.sin().abs() < 1e-14);
    let codazzi = mainardi_codazzi_residual(&forms, 1, tol)?;
    let kin = intrinsic_curvature(&forms)?;
    // The metric degenerates where sin ω = 0; Gauss is not compared there.
    let keep: Vec<bool> = forms
        .keep_mask(1)
        .into_iter()
        .zip(&omega.data)
        .map(|(k, w)| k && w.sin().abs() >= SINGULAR_SIN)
        .collect();
    let gauss: Vec<f64> = kin.data.iter().zip(&forms.K.data).map(|(a, b)| a - b).collect();
    let wuv = diff_uv(omega)?;
    let sg: Vec<f64> = wuv.data.iter().zip(&omega.data).map(|(a, w)| a - w.sin() / (rho * rho)).collect();
    let sg_keep = interior_mask(&grid, 1);
    let mut gauss = ResidualReport::from_values("gauss", &gauss, Some(&keep), tol);
    if degenerate {
        gauss = gauss.with_note("degenerate second form: sin(omega) = 0 everywhere");
    }
    Ok(PseudosphericalCheck {
        forms,
        codazzi,
        gauss,
        sine_gordon: ResidualReport::from_values("sine-gordon", &sg, Some(&sg_keep), tol),
        degenerate_second_form: degenerate,
    })
}
