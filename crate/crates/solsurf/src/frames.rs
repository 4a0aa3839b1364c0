//! Lie-algebra valued connection fields: zero-curvature residuals, frame
//! integration, Maurer–Cartan cocycle checks and the SL(2,ℝ) = BL·SO(2)
//! factorisation.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    diff_u, diff_v, integrate_line, interior_mask, midpoint_value, Field, FieldValue, Grid2, Midpoint,
    NumError, ResidualReport, ScalarField, C64,
};

#[derive(Debug, Error)]
pub enum FrameError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("algebra tag mismatch: {0:?} vs {1:?}")]
    TagMismatch(AlgebraTag, AlgebraTag),
    #[error("tag {0:?} does not use {1}x{1} matrices")]
    ShapeMismatch(AlgebraTag, usize),
    #[error("matrix at node {node} violates the {tag:?} pattern by {deviation:e}")]
    Pattern { tag: AlgebraTag, node: usize, deviation: f64 },
    #[error("initial value is not in the group (deviation {0:e})")]
    NotInGroup(f64),
    #[error("determinant differs from 1 by {0:e}")]
    DetNotOne(f64),
}

pub type FrameResult<T> = Result<T, FrameError>;

/// Tolerance on structure patterns and group membership of inputs.
pub const PATTERN_TOL: f64 = 1e-12;

/// Matrix Lie algebras in use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraTag {
    /// Anti-Hermitian traceless 2×2 complex.
    Su2,
    /// Real traceless 2×2.
    Sl2r,
    /// Antisymmetric 3×3 real.
    So3,
    /// 3×3 real of the form [[0,a,b],[a,0,c],[b,−c,0]].
    So21,
}

impl AlgebraTag {
    pub fn dim(self) -> usize {
        match self {
            AlgebraTag::Su2 | AlgebraTag::Sl2r => 2,
            AlgebraTag::So3 | AlgebraTag::So21 => 3,
        }
    }
}

/// Node values of a matrix field.
pub trait AlgebraMatrix: FieldValue + Mul<Output = Self> {
    const DIM: usize;
    fn zero() -> Self;
    fn identity() -> Self;
    fn try_inverse(&self) -> Option<Self>;
    fn determinant_c(&self) -> C64;
    /// Largest violation of the tag's algebra pattern.
    fn pattern_deviation(&self, tag: AlgebraTag) -> f64;
    /// Largest violation of the group relation for the tag (e.g. Φ†Φ = I).
    fn group_deviation(&self, tag: AlgebraTag) -> f64;
    /// su(2) norm √(−½tr A²) extended to √(½Σ|a_ij|²) for `Su2`, Frobenius otherwise.
    fn tag_norm(&self, tag: AlgebraTag) -> f64;
    /// Y' = R(s) Y along a grid line (RK4).
    fn integrate(r: &[Self], initial: Self, h: f64, mode: Midpoint) -> Result<Vec<Self>, NumError>;

    fn commutator(self, other: Self) -> Self {
        self * other - other * self
    }

    fn conjugate_by(self, g: Self) -> Option<Self> {
        g.try_inverse().map(|gi| gi * self * g)
    }
}

macro_rules! matrix_newtype {
    ($name:ident, $inner:ty, $scalar:ty, $dim:expr) => {
        #[derive(Clone, Copy, Debug, PartialEq)]
        pub struct $name(pub $inner);

        impl Default for $name {
            fn default() -> Self {
                $name(<$inner>::zeros())
            }
        }
        impl Add for $name {
            type Output = Self;
            fn add(self, o: Self) -> Self {
                $name(self.0 + o.0)
            }
        }
        impl Sub for $name {
            type Output = Self;
            fn sub(self, o: Self) -> Self {
                $name(self.0 - o.0)
            }
        }
        impl Neg for $name {
            type Output = Self;
            fn neg(self) -> Self {
                $name(-self.0)
            }
        }
        impl Mul for $name {
            type Output = Self;
            fn mul(self, o: Self) -> Self {
                $name(self.0 * o.0)
            }
        }
        impl Mul<f64> for $name {
            type Output = Self;
            fn mul(self, s: f64) -> Self {
                $name(self.0.map(|x| x * s))
            }
        }
        impl Div<f64> for $name {
            type Output = Self;
            fn div(self, s: f64) -> Self {
                $name(self.0.map(|x| x / s))
            }
        }
        impl FieldValue for $name {
            fn finite(&self) -> bool {
                self.0.iter().all(|x| x.is_finite())
            }
            fn magnitude(&self) -> f64 {
                self.0.iter().map(|x| x.norm_sqr_f()).sum::<f64>().sqrt()
            }
        }
        impl $name {
            fn integrate_inner(r: &[Self], initial: Self, h: f64, mode: Midpoint) -> Result<Vec<Self>, NumError> {
                let inner: Vec<$inner> = r.iter().map(|m| m.0).collect();
                Ok(integrate_line(&inner, initial.0, h, mode)?.into_iter().map($name).collect())
            }
        }
        const _: usize = $dim;
    };
}

trait NormSqr {
    fn norm_sqr_f(&self) -> f64;
}
impl NormSqr for f64 {
    fn norm_sqr_f(&self) -> f64 {
        self * self
    }
}
impl NormSqr for C64 {
    fn norm_sqr_f(&self) -> f64 {
        self.norm_sqr()
    }
}

matrix_newtype!(Mat2, Matrix2<C64>, C64, 2);
matrix_newtype!(Mat3, Matrix3<f64>, f64, 3);

fn max_abs_c<'a>(it: impl Iterator<Item = &'a C64>) -> f64 {
    it.map(|x| x.norm()).fold(0.0, f64::max)
}

impl AlgebraMatrix for Mat2 {
    const DIM: usize = 2;
    fn zero() -> Self {
        Mat2(Matrix2::zeros())
    }
    fn identity() -> Self {
        Mat2(Matrix2::identity())
    }
    fn try_inverse(&self) -> Option<Self> {
        self.0.try_inverse().map(Mat2)
    }
    fn determinant_c(&self) -> C64 {
        self.0.determinant()
    }
    fn pattern_deviation(&self, tag: AlgebraTag) -> f64 {
        let tr = self.0.trace().norm();
        match tag {
            AlgebraTag::Su2 => max_abs_c((self.0 + self.0.adjoint()).iter()).max(tr),
            AlgebraTag::Sl2r => self.0.iter().map(|x| x.im.abs()).fold(tr, f64::max),
            _ => f64::INFINITY,
        }
    }
    fn group_deviation(&self, tag: AlgebraTag) -> f64 {
        let det = (self.0.determinant() - C64::new(1.0, 0.0)).norm();
        match tag {
            AlgebraTag::Su2 => max_abs_c((self.0.adjoint() * self.0 - Matrix2::identity()).iter()).max(det),
            AlgebraTag::Sl2r => self.0.iter().map(|x| x.im.abs()).fold(det, f64::max),
            _ => f64::INFINITY,
        }
    }
    fn tag_norm(&self, tag: AlgebraTag) -> f64 {
        match tag {
            AlgebraTag::Su2 => (0.5 * self.0.norm_squared()).sqrt(),
            _ => self.0.norm(),
        }
    }
    fn integrate(r: &[Self], initial: Self, h: f64, mode: Midpoint) -> Result<Vec<Self>, NumError> {
        Self::integrate_inner(r, initial, h, mode)
    }
}

/// Metric preserved by SO(2,1) in the [[0,a,b],[a,0,c],[b,−c,0]] realisation.
pub fn so21_metric() -> Matrix3<f64> {
    Matrix3::from_diagonal(&nalgebra::Vector3::new(-1.0, 1.0, 1.0))
}

impl AlgebraMatrix for Mat3 {
    const DIM: usize = 3;
    fn zero() -> Self {
        Mat3(Matrix3::zeros())
    }
    fn identity() -> Self {
        Mat3(Matrix3::identity())
    }
    fn try_inverse(&self) -> Option<Self> {
        self.0.try_inverse().map(Mat3)
    }
    fn determinant_c(&self) -> C64 {
        C64::new(self.0.determinant(), 0.0)
    }
    fn pattern_deviation(&self, tag: AlgebraTag) -> f64 {
        let m = &self.0;
        match tag {
            AlgebraTag::So3 => (m + m.transpose()).amax(),
            AlgebraTag::So21 => [
                m[(0, 0)],
                m[(1, 1)],
                m[(2, 2)],
                m[(0, 1)] - m[(1, 0)],
                m[(0, 2)] - m[(2, 0)],
                m[(1, 2)] + m[(2, 1)],
            ]
            .iter()
            .fold(0.0, |a, x| a.max(x.abs())),
            _ => f64::INFINITY,
        }
    }
    fn group_deviation(&self, tag: AlgebraTag) -> f64 {
        let det = (self.0.determinant() - 1.0).abs();
        let eta = match tag {
            AlgebraTag::So3 => Matrix3::identity(),
            AlgebraTag::So21 => so21_metric(),
            _ => return f64::INFINITY,
        };
        (self.0.transpose() * eta * self.0 - eta).amax().max(det)
    }
    fn tag_norm(&self, _tag: AlgebraTag) -> f64 {
        self.0.norm()
    }
    fn integrate(r: &[Self], initial: Self, h: f64, mode: Midpoint) -> Result<Vec<Self>, NumError> {
        Self::integrate_inner(r, initial, h, mode)
    }
}

/// The Pauli matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliBasis {
    pub s1: Matrix2<C64>,
    pub s2: Matrix2<C64>,
    pub s3: Matrix2<C64>,
}

impl Default for PauliBasis {
    fn default() -> Self {
        Self::new()
    }
}

impl PauliBasis {
    pub fn new() -> Self {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        Self {
            s1: Matrix2::new(o, l, l, o),
            s2: Matrix2::new(o, -i, i, o),
            s3: Matrix2::new(l, o, o, -l),
        }
    }

    pub fn get(&self, j: usize) -> Matrix2<C64> {
        [self.s1, self.s2, self.s3][j]
    }

    /// F = −i F_j σ_j, the su(2) image of a vector.
    pub fn su2_from_vector(&self, f: [f64; 3]) -> Mat2 {
        let mi = C64::new(0.0, -1.0);
        Mat2((self.s1 * C64::new(f[0], 0.0) + self.s2 * C64::new(f[1], 0.0) + self.s3 * C64::new(f[2], 0.0)) * mi)
    }

    /// Inverse of [`Self::su2_from_vector`]: F_j = Re((i/2) tr(F σ_j)).
    pub fn vector_from_su2(&self, m: &Mat2) -> [f64; 3] {
        let h = C64::new(0.0, 0.5);
        [0, 1, 2].map(|j| (h * (m.0 * self.get(j)).trace()).re)
    }
}

/// One algebra matrix per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField<M> {
    pub tag: AlgebraTag,
    pub field: Field<M>,
}

impl<M: AlgebraMatrix> MatrixField<M> {
    /// Validates shape and the tag's structure pattern (≤ 1e−12 relative to
    /// max(1, |A|)).
    pub fn new(tag: AlgebraTag, field: Field<M>) -> FrameResult<Self> {
        if tag.dim() != M::DIM {
            return Err(FrameError::ShapeMismatch(tag, M::DIM));
        }
        for (node, m) in field.data.iter().enumerate() {
            let dev = m.pattern_deviation(tag);
            if !(dev <= PATTERN_TOL * m.magnitude().max(1.0)) {
                return Err(FrameError::Pattern { tag, node, deviation: dev });
            }
        }
        Ok(Self { tag, field })
    }

    pub fn from_fn(tag: AlgebraTag, grid: Grid2, f: impl Fn(f64, f64) -> M) -> FrameResult<Self> {
        Self::new(tag, Field::from_fn(grid, f))
    }

    pub fn grid(&self) -> Grid2 {
        self.field.grid
    }

    pub fn data(&self) -> &[M] {
        &self.field.data
    }
}

/// Which grid axis each matrix of the pair drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Φ_u = UΦ, Φ_v = VΦ; residual ∂_vU − ∂_uV + [U,V].
    #[default]
    Standard,
    /// Φ_v = UΦ, Φ_u = VΦ (the (t, x) convention with u = x, v = t);
    /// residual ∂_uU − ∂_vV + [U,V].
    Transposed,
}

/// Zero-curvature residual field and its report (max node norm in the tag's
/// norm), over nodes at least `rings` from the boundary.
pub fn zero_curvature_residual<M: AlgebraMatrix>(
    u: &MatrixField<M>,
    v: &MatrixField<M>,
    orientation: Orientation,
    rings: usize,
    tol: f64,
) -> FrameResult<(ResidualReport, Field<M>)> {
    if u.tag != v.tag {
        return Err(FrameError::TagMismatch(u.tag, v.tag));
    }
    if u.grid() != v.grid() {
        return Err(NumError::GridMismatch.into());
    }
    let (du, dv) = match orientation {
        Orientation::Standard => (diff_v(&u.field)?, diff_u(&v.field)?),
        Orientation::Transposed => (diff_u(&u.field)?, diff_v(&v.field)?),
    };
    let data: Vec<M> = (0..u.field.data.len())
        .map(|k| du.data[k] - dv.data[k] + u.field.data[k].commutator(v.field.data[k]))
        .collect();
    let norms: Vec<f64> = data.iter().map(|m| m.tag_norm(u.tag)).collect();
    let mask = interior_mask(&u.grid(), rings);
    let report = ResidualReport::from_values("zero-curvature", &norms, Some(&mask), tol);
    Ok((report, Field { grid: u.grid(), data }))
}

/// Outcome of [`integrate_frame`].
#[derive(Clone, Debug)]
pub struct FrameSolution<M> {
    pub phi: Field<M>,
    /// Group-relation drift (warning above 1e−4).
    pub group: ResidualReport,
    /// Max node difference to the transposed integration order.
    pub cross_order: ResidualReport,
    pub warnings: Vec<String>,
}

fn integrate_grid<M: AlgebraMatrix>(
    u: &Field<M>,
    v: &Field<M>,
    initial: M,
    columns_first: bool,
    mode: Midpoint,
) -> Result<Vec<M>, NumError> {
    let g = u.grid;
    let mut out = vec![M::zero(); g.len()];
    if !columns_first {
        let row: Vec<M> = (0..g.nu).map(|i| u.at(i, 0)).collect();
        let start = M::integrate(&row, initial, g.hu(), mode)?;
        for i in 0..g.nu {
            let col: Vec<M> = (0..g.nv).map(|j| v.at(i, j)).collect();
            for (j, m) in M::integrate(&col, start[i], g.hv(), mode)?.into_iter().enumerate() {
                out[g.idx(i, j)] = m;
            }
        }
    } else {
        let col: Vec<M> = (0..g.nv).map(|j| v.at(0, j)).collect();
        let start = M::integrate(&col, initial, g.hv(), mode)?;
        for j in 0..g.nv {
            let row: Vec<M> = (0..g.nu).map(|i| u.at(i, j)).collect();
            for (i, m) in M::integrate(&row, start[j], g.hu(), mode)?.into_iter().enumerate() {
                out[g.idx(i, j)] = m;
            }
        }
    }
    Ok(out)
}

/// Integrates Φ_u = UΦ, Φ_v = VΦ from Φ(u_min, v_min) = `initial`: first
/// along the bottom row in u, then up every column in v (RK4, cubic
/// midpoints). The transposed order is integrated too and compared.
pub fn integrate_frame<M: AlgebraMatrix>(
    u: &MatrixField<M>,
    v: &MatrixField<M>,
    initial: M,
    cross_tol: f64,
) -> FrameResult<FrameSolution<M>> {
    integrate_frame_with(u, v, initial, cross_tol, Midpoint::Cubic)
}

/// [`integrate_frame`] with an explicit midpoint rule.
pub fn integrate_frame_with<M: AlgebraMatrix>(
    u: &MatrixField<M>,
    v: &MatrixField<M>,
    initial: M,
    cross_tol: f64,
    mode: Midpoint,
) -> FrameResult<FrameSolution<M>> {
    if u.tag != v.tag {
        return Err(FrameError::TagMismatch(u.tag, v.tag));
    }
    if u.grid() != v.grid() {
        return Err(NumError::GridMismatch.into());
    }
    let tag = u.tag;
    let dev0 = initial.group_deviation(tag);
    if !(dev0 <= 1e-10) {
        return Err(FrameError::NotInGroup(dev0));
    }
    let main = integrate_grid(&u.field, &v.field, initial, false, mode)?;
    let other = integrate_grid(&u.field, &v.field, initial, true, mode)?;
    let drift: Vec<f64> = main.iter().map(|m| m.group_deviation(tag)).collect();
    let cross: Vec<f64> = main.iter().zip(&other).map(|(a, b)| (*a - *b).magnitude()).collect();
    let group = ResidualReport::from_values("group-drift", &drift, None, 1e-4);
    let cross_order = ResidualReport::from_values("cross-order", &cross, None, cross_tol);
    let mut warnings = Vec::new();
    if !group.pass {
        warnings.push(format!("group property drift {:e} exceeds 1e-4", group.max));
    }
    Ok(FrameSolution { phi: Field { grid: u.grid(), data: main }, group, cross_order, warnings })
}

/// Integrates F_u = P, F_v = Q for sampled P, Q (row first, then columns),
/// F(u_min, v_min) = `initial`. RK4 on a pure quadrature with cubic
/// midpoints, so O(h⁴).
pub fn integrate_exact_form<T: FieldValue>(p: &Field<T>, q: &Field<T>, initial: T) -> Result<Field<T>, NumError> {
    integrate_exact_form_order(p, q, initial, false)
}

/// [`integrate_exact_form`] with a choice of order; `columns_first`
/// integrates up the first column in v, then along every row in u.
pub fn integrate_exact_form_order<T: FieldValue>(
    p: &Field<T>,
    q: &Field<T>,
    initial: T,
    columns_first: bool,
) -> Result<Field<T>, NumError> {
    if p.grid != q.grid {
        return Err(NumError::GridMismatch);
    }
    let g = p.grid;
    let line = |s: &[T], h: f64, y0: T| -> Vec<T> {
        let mut out = Vec::with_capacity(s.len());
        let mut y = y0;
        out.push(y);
        for k in 0..s.len().saturating_sub(1) {
            let m = midpoint_value(s, k, Midpoint::Cubic);
            y = y + (s[k] + m * 4.0 + s[k + 1]) * (h / 6.0);
            out.push(y);
        }
        out
    };
    let mut data = vec![T::default(); g.len()];
    if !columns_first {
        let row: Vec<T> = (0..g.nu).map(|i| p.at(i, 0)).collect();
        let start = line(&row, g.hu(), initial);
        for i in 0..g.nu {
            let col: Vec<T> = (0..g.nv).map(|j| q.at(i, j)).collect();
            for (j, x) in line(&col, g.hv(), start[i]).into_iter().enumerate() {
                data[g.idx(i, j)] = x;
            }
        }
    } else {
        let col: Vec<T> = (0..g.nv).map(|j| q.at(0, j)).collect();
        let start = line(&col, g.hv(), initial);
        for j in 0..g.nv {
            let row: Vec<T> = (0..g.nu).map(|i| p.at(i, j)).collect();
            for (i, x) in line(&row, g.hu(), start[j]).into_iter().enumerate() {
                data[g.idx(i, j)] = x;
            }
        }
    }
    Ok(Field { grid: g, data })
}

/// Constants of the generalized symmetry family: A = α₁U_u + α₂U_v +
/// α₃U_λ + α₄∂_u(uU) + α₅vU_v + [U,M] and the analogous B.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymParams<M> {
    pub alpha: [f64; 5],
    pub m: M,
}

/// Central-difference step in the spectral parameter.
pub const LAMBDA_STEP: f64 = 1e-4;

/// A and B of the symmetry family for the Lax pair `lax(λ)` at `lambda`.
pub fn sym_generators<M: AlgebraMatrix>(
    lax: &dyn Fn(f64) -> FrameResult<(MatrixField<M>, MatrixField<M>)>,
    lambda: f64,
    params: &SymParams<M>,
) -> FrameResult<(MatrixField<M>, MatrixField<M>)> {
    let (u, v) = lax(lambda)?;
    let grid = u.grid();
    let [a1, a2, a3, a4, a5] = params.alpha;
    let (uu, uv) = (diff_u(&u.field)?, diff_v(&u.field)?);
    let (vu, vv) = (diff_u(&v.field)?, diff_v(&v.field)?);
    let (ul, vl) = if a3 != 0.0 {
        let (up, vp) = lax(lambda + LAMBDA_STEP)?;
        let (um, vm) = lax(lambda - LAMBDA_STEP)?;
        let d = |p: &Field<M>, m: &Field<M>| -> Vec<M> {
            p.data.iter().zip(&m.data).map(|(a, b)| (*a - *b) / (2.0 * LAMBDA_STEP)).collect()
        };
        (d(&up.field, &um.field), d(&vp.field, &vm.field))
    } else {
        (vec![M::zero(); grid.len()], vec![M::zero(); grid.len()])
    };
    let mut a = Vec::with_capacity(grid.len());
    let mut b = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        let (x, y) = (grid.u(i), grid.v(j));
        let (uk, vk) = (u.field.data[k], v.field.data[k]);
        a.push(
            uu.data[k] * a1
                + uv.data[k] * a2
                + ul[k] * a3
                + (uk + uu.data[k] * x) * a4
                + uv.data[k] * (a5 * y)
                + uk.commutator(params.m),
        );
        b.push(
            vu.data[k] * a1
                + vv.data[k] * a2
                + vl[k] * a3
                + vu.data[k] * (a4 * x)
                + (vk + vv.data[k] * y) * a5
                + vk.commutator(params.m),
        );
    }
    Ok((
        MatrixField { tag: u.tag, field: Field { grid, data: a } },
        MatrixField { tag: u.tag, field: Field { grid, data: b } },
    ))
}

/// Immersion F from the closed form α₁Φ⁻¹UΦ + α₂Φ⁻¹VΦ + α₃Φ⁻¹Φ_λ +
/// α₄uΦ⁻¹UΦ + α₅vΦ⁻¹VΦ − Φ⁻¹MΦ. Frames at λ and λ ± step are integrated
/// from the same λ-independent `initial`.
pub fn sym_closed_form<M: AlgebraMatrix>(
    lax: &dyn Fn(f64) -> FrameResult<(MatrixField<M>, MatrixField<M>)>,
    lambda: f64,
    initial: M,
    params: &SymParams<M>,
) -> FrameResult<Field<M>> {
    let (u, v) = lax(lambda)?;
    let grid = u.grid();
    let phi = integrate_frame(&u, &v, initial, f64::INFINITY)?.phi;
    let [a1, a2, a3, a4, a5] = params.alpha;
    let phil = if a3 != 0.0 {
        let (up, vp) = lax(lambda + LAMBDA_STEP)?;
        let (um, vm) = lax(lambda - LAMBDA_STEP)?;
        let pp = integrate_frame(&up, &vp, initial, f64::INFINITY)?.phi;
        let pm = integrate_frame(&um, &vm, initial, f64::INFINITY)?.phi;
        pp.data.iter().zip(&pm.data).map(|(a, b)| (*a - *b) / (2.0 * LAMBDA_STEP)).collect()
    } else {
        vec![M::zero(); grid.len()]
    };
    let mut data = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        let p = phi.data[k];
        let pi = p.try_inverse().ok_or(NumError::BlowUp { node: k })?;
        let conj = |x: M| pi * x * p;
        let (uc, vc) = (conj(u.field.data[k]), conj(v.field.data[k]));
        data.push(
            uc * (a1 + a4 * grid.u(i)) + vc * (a2 + a5 * grid.v(j)) + (pi * phil[k]) * a3 - conj(params.m),
        );
    }
    Ok(Field { grid, data })
}

/// Immersion F solving F_u = Φ⁻¹AΦ, F_v = Φ⁻¹BΦ with F(u_min, v_min) = 0,
/// together with the max node difference to the transposed integration
/// order.
pub fn sym_immersion<M: AlgebraMatrix>(
    phi: &Field<M>,
    a: &MatrixField<M>,
    b: &MatrixField<M>,
    cross_tol: f64,
) -> FrameResult<(Field<M>, ResidualReport)> {
    let grid = phi.grid;
    let mut p = Vec::with_capacity(grid.len());
    let mut q = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let g = phi.data[k];
        let gi = g.try_inverse().ok_or(NumError::BlowUp { node: k })?;
        p.push(gi * a.field.data[k] * g);
        q.push(gi * b.field.data[k] * g);
    }
    let (p, q) = (Field { grid, data: p }, Field { grid, data: q });
    let f = integrate_exact_form_order(&p, &q, M::zero(), false)?;
    let t = integrate_exact_form_order(&p, &q, M::zero(), true)?;
    let diff: Vec<f64> = f.data.iter().zip(&t.data).map(|(x, y)| (*x - *y).magnitude()).collect();
    Ok((f, ResidualReport::from_values("immersion-cross-order", &diff, None, cross_tol)))
}

/// A one-form a dx + b dt on a grid with u ↔ x and v ↔ t. When `a_t` and
/// `b_x` are supplied they are used instead of finite differences.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub a: ScalarField,
    pub b: ScalarField,
    pub a_t: Option<ScalarField>,
    pub b_x: Option<ScalarField>,
}

impl OneForm {
    pub fn new(a: ScalarField, b: ScalarField) -> Self {
        Self { a, b, a_t: None, b_x: None }
    }

    pub fn with_derivatives(a: ScalarField, b: ScalarField, a_t: ScalarField, b_x: ScalarField) -> Self {
        Self { a, b, a_t: Some(a_t), b_x: Some(b_x) }
    }

    pub fn zero(grid: Grid2) -> Self {
        let z = Field::constant(grid, 0.0);
        Self::with_derivatives(z.clone(), z.clone(), z.clone(), z)
    }

    /// dω ↦ b_x − a_t.
    pub fn exterior(&self) -> Result<ScalarField, NumError> {
        let bx = match &self.b_x {
            Some(f) => f.clone(),
            None => diff_u(&self.b)?,
        };
        let at = match &self.a_t {
            Some(f) => f.clone(),
            None => diff_v(&self.a)?,
        };
        bx.zip_map(&at, |x, y| x - y)
    }

    /// ω∧η ↦ a_ω b_η − b_ω a_η.
    pub fn wedge(&self, other: &OneForm) -> Result<ScalarField, NumError> {
        let grid = self.a.grid;
        if other.a.grid != grid || self.b.grid != grid || other.b.grid != grid {
            return Err(NumError::GridMismatch);
        }
        let data = (0..grid.len())
            .map(|k| self.a.data[k] * other.b.data[k] - self.b.data[k] * other.a.data[k])
            .collect();
        Ok(Field { grid, data })
    }
}

/// Residual fields dω¹ − ω³∧ω², dω² − ω¹∧ω³, dω³ − ω¹∧ω² and reports.
#[derive(Clone, Debug)]
pub struct CocycleResidual {
    pub fields: [ScalarField; 3],
    pub reports: [ResidualReport; 3],
}

/// Maurer–Cartan residuals of three one-forms, reported over nodes at least
/// `rings` from the boundary.
pub fn mc_cocycle_residual(forms: &[OneForm; 3], rings: usize, tol: f64) -> FrameResult<CocycleResidual> {
    let [w1, w2, w3] = forms;
    let r1 = w1.exterior()?.zip_map(&w3.wedge(w2)?, |a, b| a - b)?;
    let r2 = w2.exterior()?.zip_map(&w1.wedge(w3)?, |a, b| a - b)?;
    let r3 = w3.exterior()?.zip_map(&w1.wedge(w2)?, |a, b| a - b)?;
    let mask = interior_mask(&r1.grid, rings);
    let reports = [("maurer-cartan-1", &r1), ("maurer-cartan-2", &r2), ("maurer-cartan-3", &r3)]
        .map(|(n, f)| ResidualReport::from_values(n, &f.data, Some(&mask), tol));
    Ok(CocycleResidual { fields: [r1, r2, r3], reports })
}

/// A scalar u(x, t) with the partial derivatives the cocycles need.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionJet {
    pub u: ScalarField,
    pub u_x: ScalarField,
    pub u_t: ScalarField,
    pub u_xx: ScalarField,
    pub u_xt: ScalarField,
    pub u_xxx: ScalarField,
}

impl SolutionJet {
    /// From a closed form returning [u, u_x, u_t, u_xx, u_xt, u_xxx].
    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> [f64; 6]) -> Self {
        let all = Field::from_fn(grid, f);
        let c = |k: usize| all.map(|a| a[k]);
        Self { u: c(0), u_x: c(1), u_t: c(2), u_xx: c(3), u_xt: c(4), u_xxx: c(5) }
    }

    /// All derivatives by finite differences (nested for higher orders).
    pub fn from_samples(u: ScalarField) -> Result<Self, NumError> {
        let u_x = diff_u(&u)?;
        let u_t = diff_v(&u)?;
        let u_xx = crate::numerics::diff_uu(&u)?;
        let u_xt = diff_v(&u_x)?;
        let u_xxx = diff_u(&u_xx)?;
        Ok(Self { u, u_x, u_t, u_xx, u_xt, u_xxx })
    }

    fn grid(&self) -> Grid2 {
        self.u.grid
    }

    fn build(&self, f: impl Fn(usize) -> f64) -> ScalarField {
        Field { grid: self.grid(), data: (0..self.grid().len()).map(f).collect() }
    }
}

/// Sine-Gordon cocycle σ¹ = sin u dt, σ² = dx + cos u dt, σ³ = u_x dx with
/// exact exterior derivatives from the jet.
pub fn sg_cocycle(j: &SolutionJet) -> [OneForm; 3] {
    let (u, ux, uxt) = (&j.u.data, &j.u_x.data, &j.u_xt.data);
    let zero = j.build(|_| 0.0);
    [
        OneForm::with_derivatives(zero.clone(), j.build(|k| u[k].sin()), zero.clone(), j.build(|k| u[k].cos() * ux[k])),
        OneForm::with_derivatives(j.build(|_| 1.0), j.build(|k| u[k].cos()), zero.clone(), j.build(|k| -u[k].sin() * ux[k])),
        OneForm::with_derivatives(j.u_x.clone(), zero.clone(), j.build(|k| uxt[k]), zero),
    ]
}

/// KdV cocycle σ¹ = 2u_x dt, σ² = −(1+u)dx − (2u + 2u² − u_xx)dt,
/// σ³ = (1−u)dx + (2u − 2u² + u_xx)dt with exact exterior derivatives.
pub fn kdv_cocycle(j: &SolutionJet) -> [OneForm; 3] {
    let (u, ux, ut, uxx, uxxx) = (&j.u.data, &j.u_x.data, &j.u_t.data, &j.u_xx.data, &j.u_xxx.data);
    let zero = j.build(|_| 0.0);
    [
        OneForm::with_derivatives(zero.clone(), j.build(|k| 2.0 * ux[k]), zero.clone(), j.build(|k| 2.0 * uxx[k])),
        OneForm::with_derivatives(
            j.build(|k| -(1.0 + u[k])),
            j.build(|k| -(2.0 * u[k] + 2.0 * u[k] * u[k] - uxx[k])),
            j.build(|k| -ut[k]),
            j.build(|k| -(2.0 * ux[k] + 4.0 * u[k] * ux[k] - uxxx[k])),
        ),
        OneForm::with_derivatives(
            j.build(|k| 1.0 - u[k]),
            j.build(|k| 2.0 * u[k] - 2.0 * u[k] * u[k] + uxx[k]),
            j.build(|k| -ut[k]),
            j.build(|k| 2.0 * ux[k] - 4.0 * u[k] * ux[k] + uxxx[k]),
        ),
    ]
}

/// X = A·B with A = [[α, 0], [β, 1/α]] and B = [[cos γ, sin γ], [−sin γ, cos γ]].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sl2Decomposition {
    pub alpha: f64,
    pub beta: f64,
    /// In (−π, π].
    pub gamma: f64,
}

impl Sl2Decomposition {
    pub fn reconstruct(&self) -> Matrix2<f64> {
        let (s, c) = self.gamma.sin_cos();
        Matrix2::new(self.alpha, 0.0, self.beta, 1.0 / self.alpha) * Matrix2::new(c, s, -s, c)
    }
}

/// Factorises a real 2×2 matrix with unit determinant.
pub fn sl2_decompose(x: &Matrix2<f64>) -> FrameResult<Sl2Decomposition> {
    let dev = (x.determinant() - 1.0).abs();
    if !(dev <= 1e-10) {
        return Err(FrameError::DetNotOne(dev));
    }
    let (x11, x12, x21, x22) = (x[(0, 0)], x[(0, 1)], x[(1, 0)], x[(1, 1)]);
    let alpha = x11.hypot(x12);
    assert!(alpha > 0.0, "invertible matrix with zero first row");
    // Two quotient forms for β, equal when det = 1; divide by the larger entry.
    let beta = if x12 == 0.0 {
        x21 * alpha / x11
    } else if x11 == 0.0 {
        x22 * alpha / x12
    } else if x12.abs() >= x11.abs() {
        x22 / x12 * alpha - x11 / (x12 * alpha)
    } else {
        x21 / x11 * alpha + x12 / (x11 * alpha)
    };
    let mut gamma = x12.atan2(x11);
    if gamma <= -std::f64::consts::PI {
        gamma = std::f64::consts::PI;
    }
    Ok(Sl2Decomposition { alpha, beta, gamma })
}

/// Pullback forms ω¹, ω², ω³ of a smooth field X = A(α, β)·B(γ):
/// ω¹ = cos ψ τ¹ + sin ψ τ², ω² = −sin ψ τ¹ + cos ψ τ², ω³ = τ² + dψ with
/// τ¹ = 2dα/α, τ² = β dα − α dβ, ψ = 2γ. Derivatives by finite differences.
pub fn sl2_pullback_forms(alpha: &ScalarField, beta: &ScalarField, gamma: &ScalarField) -> FrameResult<[OneForm; 3]> {
    let grid = alpha.grid;
    let (ax, at) = (diff_u(alpha)?, diff_v(alpha)?);
    let (bx, bt) = (diff_u(beta)?, diff_v(beta)?);
    let (gx, gt) = (diff_u(gamma)?, diff_v(gamma)?);
    let n = grid.len();
    let mut comps: [Vec<f64>; 6] = Default::default();
    for k in 0..n {
        let (a, b, psi) = (alpha.data[k], beta.data[k], 2.0 * gamma.data[k]);
        let (s, c) = psi.sin_cos();
        let t1 = (2.0 * ax.data[k] / a, 2.0 * at.data[k] / a);
        let t2 = (b * ax.data[k] - a * bx.data[k], b * at.data[k] - a * bt.data[k]);
        comps[0].push(c * t1.0 + s * t2.0);
        comps[1].push(c * t1.1 + s * t2.1);
        comps[2].push(-s * t1.0 + c * t2.0);
        comps[3].push(-s * t1.1 + c * t2.1);
        comps[4].push(t2.0 + 2.0 * gx.data[k]);
        comps[5].push(t2.1 + 2.0 * gt.data[k]);
    }
    let [a1, b1, a2, b2, a3, b3] = comps.map(|d| Field { grid, data: d });
    Ok([OneForm::new(a1, b1), OneForm::new(a2, b2), OneForm::new(a3, b3)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Plane;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_relations() {
        let p = PauliBasis::new();
        let i = c(0.0, 1.0);
        assert_eq!(p.s1 * p.s2, p.s3 * i);
        assert_eq!(p.s2 * p.s3, p.s1 * i);
        assert_eq!(p.s3 * p.s1, p.s2 * i);
        for j in 0..3 {
            assert_eq!(p.get(j) * p.get(j), Matrix2::identity());
        }
    }

    #[test]
    fn vector_round_trip() {
        let p = PauliBasis::new();
        let m = p.su2_from_vector([0.3, -1.2, 2.5]);
        assert!(m.pattern_deviation(AlgebraTag::Su2) < 1e-15);
        let v = p.vector_from_su2(&m);
        assert!((v[0] - 0.3).abs() < 1e-15 && (v[1] + 1.2).abs() < 1e-15 && (v[2] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn constructor_rejects_pattern_violations() {
        let g = Grid2::square(1.0, 5, Plane::Real).unwrap();
        let bad = MatrixField::from_fn(AlgebraTag::Su2, g, |_, _| Mat2::identity());
        assert!(matches!(bad, Err(FrameError::Pattern { .. })));
        let shape = MatrixField::from_fn(AlgebraTag::So3, g, |_, _| Mat2::zero());
        assert!(matches!(shape, Err(FrameError::ShapeMismatch(..))));
        let so21 = Mat3(Matrix3::new(0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, -3.0, 0.0));
        assert!(MatrixField::from_fn(AlgebraTag::So21, g, |_, _| so21).is_ok());
        assert!(MatrixField::from_fn(AlgebraTag::So3, g, |_, _| so21).is_err());
    }

    #[test]
    fn constant_pauli_pair_residual_is_commutator() {
        let g = Grid2::square(1.0, 7, Plane::Real).unwrap();
        let p = PauliBasis::new();
        let h = c(0.0, -0.5);
        let u = MatrixField::from_fn(AlgebraTag::Su2, g, |_, _| Mat2(p.s1 * h)).unwrap();
        let v = MatrixField::from_fn(AlgebraTag::Su2, g, |_, _| Mat2(p.s2 * h)).unwrap();
        let (rep, field) = zero_curvature_residual(&u, &v, Orientation::Standard, 0, 1e-6).unwrap();
        assert!((rep.max - 0.5).abs() < 1e-15 && (rep.mean - 0.5).abs() < 1e-15);
        assert!((field.data[0].0 - p.s3 * h).norm() < 1e-15);
        let (swapped, _) = zero_curvature_residual(&v, &u, Orientation::Transposed, 0, 1e-6).unwrap();
        assert!((swapped.max - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tag_mismatch_is_error() {
        let g = Grid2::square(1.0, 5, Plane::Real).unwrap();
        let a = MatrixField::from_fn(AlgebraTag::Su2, g, |_, _| Mat2::zero()).unwrap();
        let b = MatrixField::from_fn(AlgebraTag::Sl2r, g, |_, _| Mat2::zero()).unwrap();
        assert!(matches!(
            zero_curvature_residual(&a, &b, Orientation::Standard, 0, 1.0),
            Err(FrameError::TagMismatch(..))
        ));
    }

    #[test]
    fn trivial_frame_is_identity() {
        let g = Grid2::square(1.0, 9, Plane::Real).unwrap();
        let z = MatrixField::from_fn(AlgebraTag::So3, g, |_, _| Mat3::zero()).unwrap();
        let s = integrate_frame(&z, &z, Mat3::identity(), 1e-12).unwrap();
        assert!(s.phi.data.iter().all(|m| *m == Mat3::identity()));
        assert!(s.cross_order.pass && s.warnings.is_empty());
    }

    #[test]
    fn non_group_initial_rejected() {
        let g = Grid2::square(1.0, 5, Plane::Real).unwrap();
        let z = MatrixField::from_fn(AlgebraTag::Su2, g, |_, _| Mat2::zero()).unwrap();
        assert!(matches!(integrate_frame(&z, &z, Mat2::identity() * 2.0, 1.0), Err(FrameError::NotInGroup(_))));
    }

    #[test]
    fn sl2_special_cases() {
        let d = sl2_decompose(&Matrix2::identity()).unwrap();
        assert_eq!((d.alpha, d.beta, d.gamma), (1.0, 0.0, 0.0));
        let (s, co) = 0.7f64.sin_cos();
        let d = sl2_decompose(&Matrix2::new(co, s, -s, co)).unwrap();
        assert!((d.alpha - 1.0).abs() < 1e-14 && d.beta.abs() < 1e-14 && (d.gamma - 0.7).abs() < 1e-14);
        let d = sl2_decompose(&Matrix2::new(-1.0, 0.0, 0.5, -1.0)).unwrap();
        assert_eq!(d.gamma, std::f64::consts::PI);
        assert!((d.reconstruct() - Matrix2::new(-1.0, 0.0, 0.5, -1.0)).amax() < 1e-15);
        assert!(matches!(sl2_decompose(&Matrix2::new(2.0, 0.0, 0.0, 1.0)), Err(FrameError::DetNotOne(_))));
    }

    #[test]
    fn zero_forms_have_zero_cocycle_residual() {
        let g = Grid2::square(1.0, 5, Plane::Real).unwrap();
        let z = OneForm::zero(g);
        let r = mc_cocycle_residual(&[z.clone(), z.clone(), z], 0, 1e-12).unwrap();
        assert!(r.reports.iter().all(|x| x.max == 0.0));
    }

    #[test]
    fn exact_form_integration_recovers_cubic() {
        let g = Grid2::square(1.0, 11, Plane::Real).unwrap();
        let p = Field::from_fn(g, |u, v| 3.0 * u * u * v);
        let q = Field::from_fn(g, |u, v| u * u * u + 2.0 * v);
        let f = integrate_exact_form(&p, &q, 0.0).unwrap();
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            let (u, v) = (g.u(i), g.v(j));
            let exact = u * u * u * v + v * v - (-1.0f64 * -1.0 * -1.0 * -1.0 + 1.0);
            assert!((f.data[k] - exact).abs() < 1e-12, "{} {}", f.data[k], exact);
        }
    }
}
