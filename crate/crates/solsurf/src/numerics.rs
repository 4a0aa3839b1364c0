//! Uniform grids, sampled fields, finite differences, line integration of
//! linear matrix ODEs and contour quadrature along grid edges.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{ComplexField as Scalar, SMatrix};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch")]
    GridMismatch,
    #[error("integration blow-up at node {node}")]
    BlowUp { node: usize },
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

pub type NumResult<T> = Result<T, NumError>;

/// How the (u, v) coordinates of a grid are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plane {
    /// Independent real coordinates (u, v) or (x, t).
    Real,
    /// z = u + i v.
    Complex,
}

/// Uniform tensor grid. Node (i, j) sits at (u_min + i h_u, v_min + j h_v);
/// storage is row-major with rows along u, i.e. index j * nu + i.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid2 {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub nu: usize,
    pub nv: usize,
    pub plane: Plane,
}

impl Grid2 {
    pub fn new(
        u: (f64, f64),
        v: (f64, f64),
        nu: usize,
        nv: usize,
        plane: Plane,
    ) -> NumResult<Self> {
        if nu < 3 || nv < 3 {
            return Err(NumError::GridTooCoarse(format!(
                "need at least 3 nodes per direction, got {nu}x{nv}"
            )));
        }
        let finite = [u.0, u.1, v.0, v.1].iter().all(|x| x.is_finite());
        if !finite || u.1 <= u.0 || v.1 <= v.0 {
            return Err(NumError::InvalidGrid(format!(
                "empty or non-finite range u={u:?} v={v:?}"
            )));
        }
        Ok(Self { u_min: u.0, u_max: u.1, v_min: v.0, v_max: v.1, nu, nv, plane })
    }

    pub fn real(u: (f64, f64), v: (f64, f64), nu: usize, nv: usize) -> NumResult<Self> {
        Self::new(u, v, nu, nv, Plane::Real)
    }

    pub fn complex(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> NumResult<Self> {
        Self::new(x, y, nx, ny, Plane::Complex)
    }

    /// Square grid [-l, l]^2 with n nodes per side.
    pub fn square(l: f64, n: usize, plane: Plane) -> NumResult<Self> {
        Self::new((-l, l), (-l, l), n, n, plane)
    }

    pub fn hu(&self) -> f64 {
        (self.u_max - self.u_min) / (self.nu - 1) as f64
    }

    pub fn hv(&self) -> f64 {
        (self.v_max - self.v_min) / (self.nv - 1) as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.hu()
    }

    pub fn v(&self, j: usize) -> f64 {
        self.v_min + j as f64 * self.hv()
    }

    pub fn z(&self, i: usize, j: usize) -> C64 {
        C64::new(self.u(i), self.v(j))
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nu + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nu, k / self.nu)
    }

    /// Same node layout, values at half resolution in each direction
    /// (every other node). Needs odd node counts.
    pub fn coarsened(&self) -> NumResult<Self> {
        if self.nu % 2 == 0 || self.nv % 2 == 0 {
            return Err(NumError::InvalidGrid("coarsening needs odd node counts".into()));
        }
        Self::new(
            (self.u_min, self.u_max),
            (self.v_min, self.v_max),
            (self.nu + 1) / 2,
            (self.nv + 1) / 2,
            self.plane,
        )
    }

    /// Node spacing halved; inverse of [`Grid2::coarsened`].
    pub fn refined(&self) -> NumResult<Self> {
        Self::new(
            (self.u_min, self.u_max),
            (self.v_min, self.v_max),
            2 * self.nu - 1,
            2 * self.nv - 1,
            self.plane,
        )
    }

    /// True when the node is at least `rings` nodes away from every edge.
    pub fn is_interior(&self, i: usize, j: usize, rings: usize) -> bool {
        i >= rings && j >= rings && i + rings < self.nu && j + rings < self.nv
    }
}

/// Values that can live on grid nodes and be differenced.
pub trait FieldValue:
    Copy
    + Send
    + Sync
    + Default
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn finite(&self) -> bool;
    fn magnitude(&self) -> f64;
}

/// Scalar node values with an embedding into the complex numbers.
pub trait ToComplex: FieldValue {
    fn to_c64(self) -> C64;
}

impl FieldValue for f64 {
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl ToComplex for f64 {
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl FieldValue for C64 {
    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl ToComplex for C64 {
    fn to_c64(self) -> C64 {
        self
    }
}

/// One value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    pub grid: Grid2,
    pub data: Vec<T>,
}

/// Real- or complex-valued sampled function.
pub type ScalarField = Field<f64>;
pub type ComplexField = Field<C64>;

impl<T: Copy> Field<T> {
    pub fn from_vec(grid: Grid2, data: Vec<T>) -> NumResult<Self> {
        if data.len() != grid.len() {
            return Err(NumError::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn constant(grid: Grid2, value: T) -> Self {
        Self { grid, data: vec![value; grid.len()] }
    }

    /// Samples `f(u, v)` at every node.
    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> T) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.nv {
            let v = grid.v(j);
            for i in 0..grid.nu {
                data.push(f(grid.u(i), v));
            }
        }
        Self { grid, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[self.grid.idx(i, j)]
    }

    pub fn map<S>(&self, f: impl Fn(T) -> S) -> Field<S> {
        Field { grid: self.grid, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map<S: Copy, R>(&self, other: &Field<S>, f: impl Fn(T, S) -> R) -> NumResult<Field<R>> {
        if self.grid != other.grid {
            return Err(NumError::GridMismatch);
        }
        Ok(Field {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Every other node in both directions (see [`Grid2::coarsened`]).
    pub fn coarsened(&self) -> NumResult<Self> {
        let g = self.grid.coarsened()?;
        Ok(Field::from_vec(
            g,
            (0..g.len())
                .map(|k| {
                    let (i, j) = g.ij(k);
                    self.at(2 * i, 2 * j)
                })
                .collect(),
        )?)
    }
}

impl ScalarField {
    pub fn to_complex(&self) -> ComplexField {
        self.map(|x| C64::new(x, 0.0))
    }
}

impl ComplexField {
    pub fn re(&self) -> ScalarField {
        self.map(|z| z.re)
    }
    pub fn im(&self) -> ScalarField {
        self.map(|z| z.im)
    }
    pub fn conj(&self) -> ComplexField {
        self.map(|z| z.conj())
    }
}

/// Differencing direction. For complex-plane grids `Z` is
/// ½(∂_u − i∂_v) and `Zbar` is ½(∂_u + i∂_v).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    U,
    V,
    Z,
    Zbar,
}

#[derive(Clone, Copy)]
enum Axis {
    U,
    V,
}

fn axis_len(grid: &Grid2, axis: Axis) -> (usize, usize, f64) {
    match axis {
        Axis::U => (grid.nu, grid.nv, grid.hu()),
        Axis::V => (grid.nv, grid.nu, grid.hv()),
    }
}

fn index_along(grid: &Grid2, axis: Axis, line: usize, k: usize) -> usize {
    match axis {
        Axis::U => grid.idx(k, line),
        Axis::V => grid.idx(line, k),
    }
}

fn first_diff<T: FieldValue>(f: &Field<T>, axis: Axis) -> NumResult<Field<T>> {
    let (n, lines, h) = axis_len(&f.grid, axis);
    if n < 3 {
        return Err(NumError::GridTooCoarse("fewer than 3 nodes in differenced direction".into()));
    }
    let mut out = vec![T::default(); f.data.len()];
    let g = &f.grid;
    for line in 0..lines {
        let at = |k: usize| f.data[index_along(g, axis, line, k)];
        out[index_along(g, axis, line, 0)] = (at(1) * 4.0 - at(0) * 3.0 - at(2)) / (2.0 * h);
        for k in 1..n - 1 {
            out[index_along(g, axis, line, k)] = (at(k + 1) - at(k - 1)) / (2.0 * h);
        }
        out[index_along(g, axis, line, n - 1)] =
            (at(n - 1) * 3.0 - at(n - 2) * 4.0 + at(n - 3)) / (2.0 * h);
    }
    Ok(Field { grid: f.grid, data: out })
}

fn second_diff<T: FieldValue>(f: &Field<T>, axis: Axis) -> NumResult<Field<T>> {
    let (n, lines, h) = axis_len(&f.grid, axis);
    if n < 4 {
        return Err(NumError::GridTooCoarse(
            "second differences need at least 4 nodes in the differenced direction".into(),
        ));
    }
    let h2 = h * h;
    let mut out = vec![T::default(); f.data.len()];
    let g = &f.grid;
    for line in 0..lines {
        let at = |k: usize| f.data[index_along(g, axis, line, k)];
        out[index_along(g, axis, line, 0)] =
            (at(0) * 2.0 - at(1) * 5.0 + at(2) * 4.0 - at(3)) / h2;
        for k in 1..n - 1 {
            out[index_along(g, axis, line, k)] = (at(k + 1) - at(k) * 2.0 + at(k - 1)) / h2;
        }
        out[index_along(g, axis, line, n - 1)] =
            (at(n - 1) * 2.0 - at(n - 2) * 5.0 + at(n - 3) * 4.0 - at(n - 4)) / h2;
    }
    Ok(Field { grid: f.grid, data: out })
}

/// ∂_u with second-order central differences inside and 3-point one-sided
/// differences on the boundary.
pub fn diff_u<T: FieldValue>(f: &Field<T>) -> NumResult<Field<T>> {
    first_diff(f, Axis::U)
}

pub fn diff_v<T: FieldValue>(f: &Field<T>) -> NumResult<Field<T>> {
    first_diff(f, Axis::V)
}

/// ∂²_u with the 3-point stencil inside, 4-point one-sided on the boundary.
pub fn diff_uu<T: FieldValue>(f: &Field<T>) -> NumResult<Field<T>> {
    second_diff(f, Axis::U)
}

pub fn diff_vv<T: FieldValue>(f: &Field<T>) -> NumResult<Field<T>> {
    second_diff(f, Axis::V)
}

/// Mixed derivative; the interior stencil is the usual 4-point cross.
pub fn diff_uv<T: FieldValue>(f: &Field<T>) -> NumResult<Field<T>> {
    diff_v(&diff_u(f)?)
}

/// ∂∂̄ = ¼(∂²_u + ∂²_v) via the 5-point Laplacian.
pub fn diff_zzbar<T: FieldValue>(f: &Field<T>) -> NumResult<Field<T>> {
    let a = diff_uu(f)?;
    let b = diff_vv(f)?;
    a.zip_map(&b, |x, y| (x + y) / 4.0)
}

/// Derivative in one of the four directions; z-derivatives combine the
/// u- and v-differences as ½(∂_u ∓ i∂_v).
pub fn diff<T: ToComplex>(f: &Field<T>, dir: Direction) -> NumResult<ComplexField> {
    match dir {
        Direction::U => Ok(diff_u(f)?.map(T::to_c64)),
        Direction::V => Ok(diff_v(f)?.map(T::to_c64)),
        Direction::Z | Direction::Zbar => {
            let s = if dir == Direction::Z { -1.0 } else { 1.0 };
            let du = diff_u(f)?;
            let dv = diff_v(f)?;
            du.zip_map(&dv, |a, b| {
                let a = a.to_c64();
                let b = b.to_c64();
                (a + C64::new(0.0, s) * b) * 0.5
            })
        }
    }
}

/// How coefficient samples are interpolated to the RK4 half step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Midpoint {
    /// Mean of the two neighbouring samples (second order).
    Average,
    /// Four-point cubic interpolation, one-sided at the line ends.
    #[default]
    Cubic,
}

/// Interpolation weights (node, weight) for the half node i + ½ of a line
/// with n uniform samples; unused slots carry weight 0.
pub fn midpoint_weights(n: usize, i: usize, mode: Midpoint) -> [(usize, f64); 4] {
    debug_assert!(i + 1 < n);
    if mode == Midpoint::Average || n < 4 {
        return [(i, 0.5), (i + 1, 0.5), (i, 0.0), (i, 0.0)];
    }
    const W: f64 = 1.0 / 16.0;
    if i == 0 {
        [(0, 5.0 * W), (1, 15.0 * W), (2, -5.0 * W), (3, W)]
    } else if i + 2 >= n {
        [(n - 1, 5.0 * W), (n - 2, 15.0 * W), (n - 3, -5.0 * W), (n - 4, W)]
    } else {
        [(i - 1, -W), (i, 9.0 * W), (i + 1, 9.0 * W), (i + 2, -W)]
    }
}

/// Value at the half node i + ½ of a uniformly sampled sequence.
pub fn midpoint_value<T: Copy + Add<Output = T> + Mul<f64, Output = T>>(
    s: &[T],
    i: usize,
    mode: Midpoint,
) -> T {
    let w = midpoint_weights(s.len(), i, mode);
    let mut acc = s[w[0].0] * w[0].1;
    for &(k, c) in &w[1..] {
        if c != 0.0 {
            acc = acc + s[k] * c;
        }
    }
    acc
}

fn midpoint_matrix<T, const D: usize>(r: &[SMatrix<T, D, D>], i: usize, mode: Midpoint) -> SMatrix<T, D, D>
where
    T: Scalar<RealField = f64> + Copy,
{
    let w = midpoint_weights(r.len(), i, mode);
    let mut acc = SMatrix::<T, D, D>::zeros();
    for &(k, c) in &w {
        if c != 0.0 {
            acc += r[k] * T::from_real(c);
        }
    }
    acc
}

/// Classical RK4 for Y' = R(s) Y along one grid line. `r[k]` is the
/// coefficient at node k, `h` the signed step. Returns Y at every node.
pub fn integrate_line<T, const D: usize>(
    r: &[SMatrix<T, D, D>],
    initial: SMatrix<T, D, D>,
    h: f64,
    mode: Midpoint,
) -> NumResult<Vec<SMatrix<T, D, D>>>
where
    T: Scalar<RealField = f64> + Copy,
{
    let n = r.len();
    let mut out = Vec::with_capacity(n.max(1));
    if !initial.iter().all(|x| x.is_finite()) {
        return Err(NumError::BlowUp { node: 0 });
    }
    out.push(initial);
    if n < 2 {
        return Ok(out);
    }
    let ht = T::from_real(h);
    let half = T::from_real(0.5 * h);
    let sixth = T::from_real(h / 6.0);
    let two = T::from_real(2.0);
    let mut y = initial;
    for k in 0..n - 1 {
        let rm = midpoint_matrix(r, k, mode);
        let k1 = r[k] * y;
        let k2 = rm * (y + k1 * half);
        let k3 = rm * (y + k2 * half);
        let k4 = r[k + 1] * (y + k3 * ht);
        y += (k1 + k2 * two + k3 * two + k4) * sixth;
        if !y.iter().all(|x| x.is_finite()) {
            return Err(NumError::BlowUp { node: k + 1 });
        }
        out.push(y);
    }
    Ok(out)
}

/// RK4 for a nonlinear scalar/vector ODE y' = f(s, y) sampled on a line;
/// `f` receives the fractional node position (k, k + ½, k + 1).
pub fn integrate_nonlinear<Y, F>(n: usize, initial: Y, h: f64, f: F) -> NumResult<Vec<Y>>
where
    Y: Copy + Add<Output = Y> + Mul<f64, Output = Y> + FieldValue,
    F: Fn(f64, Y) -> Y,
{
    let mut out = Vec::with_capacity(n);
    if !initial.finite() {
        return Err(NumError::BlowUp { node: 0 });
    }
    out.push(initial);
    let mut y = initial;
    for k in 0..n.saturating_sub(1) {
        let s = k as f64;
        let k1 = f(s, y);
        let k2 = f(s + 0.5, y + k1 * (0.5 * h));
        let k3 = f(s + 0.5, y + k2 * (0.5 * h));
        let k4 = f(s + 1.0, y + k3 * h);
        y = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !y.finite() {
            return Err(NumError::BlowUp { node: k + 1 });
        }
        out.push(y);
    }
    Ok(out)
}

/// Ordered list of grid nodes, consecutive entries adjacent along an edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourPath {
    pub grid_nu: usize,
    pub grid_nv: usize,
    pub nodes: Vec<(usize, usize)>,
}

/// Which leg a staircase path takes first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Staircase {
    /// Along u (the row) first, then along v.
    RowFirst,
    ColumnFirst,
}

impl ContourPath {
    pub fn new(grid: &Grid2, nodes: Vec<(usize, usize)>) -> NumResult<Self> {
        if nodes.is_empty() {
            return Err(NumError::InvalidPath("empty path".into()));
        }
        for &(i, j) in &nodes {
            if i >= grid.nu || j >= grid.nv {
                return Err(NumError::InvalidPath(format!("node ({i},{j}) leaves the grid")));
            }
        }
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            let d = a.0.abs_diff(b.0) + a.1.abs_diff(b.1);
            if d != 1 {
                return Err(NumError::InvalidPath(format!("nodes {a:?} and {b:?} are not adjacent")));
            }
        }
        Ok(Self { grid_nu: grid.nu, grid_nv: grid.nv, nodes })
    }

    /// Axis-aligned two-leg path from `from` to `to`.
    pub fn staircase(
        grid: &Grid2,
        from: (usize, usize),
        to: (usize, usize),
        order: Staircase,
    ) -> NumResult<Self> {
        let mut nodes = vec![from];
        let (mut i, mut j) = from;
        let step_i = |i: &mut usize, nodes: &mut Vec<(usize, usize)>, j: usize| {
            while *i != to.0 {
                if *i < to.0 {
                    *i += 1
                } else {
                    *i -= 1
                }
                nodes.push((*i, j));
            }
        };
        let step_j = |j: &mut usize, nodes: &mut Vec<(usize, usize)>, i: usize| {
            while *j != to.1 {
                if *j < to.1 {
                    *j += 1
                } else {
                    *j -= 1
                }
                nodes.push((i, *j));
            }
        };
        match order {
            Staircase::RowFirst => {
                step_i(&mut i, &mut nodes, j);
                step_j(&mut j, &mut nodes, i);
            }
            Staircase::ColumnFirst => {
                step_j(&mut j, &mut nodes, i);
                step_i(&mut i, &mut nodes, j);
            }
        }
        Self::new(grid, nodes)
    }

    pub fn start(&self) -> (usize, usize) {
        self.nodes[0]
    }

    pub fn end(&self) -> (usize, usize) {
        *self.nodes.last().expect("non-empty path")
    }

    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Self { nodes, ..self.clone() }
    }

    /// Joins two paths; `other` must start where `self` ends.
    pub fn concat(&self, other: &ContourPath) -> NumResult<Self> {
        if self.end() != other.start() {
            return Err(NumError::InvalidPath("paths do not join".into()));
        }
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes[1..]);
        Ok(Self { nodes, ..self.clone() })
    }
}

/// Edge quadrature for [`contour_integral`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    /// Composite trapezoid, O(h²).
    #[default]
    Trapezoid,
    /// Trapezoid with the Euler–Maclaurin end correction per edge, using
    /// finite-difference tangential derivatives; O(h⁴).
    EndCorrected,
}

/// Tangential derivative of a field at node (i, j) along u (`along_u`) or v.
fn tangential<T: ToComplex>(f: &Field<T>, i: usize, j: usize, along_u: bool) -> C64 {
    let g = &f.grid;
    let (k, n, h) = if along_u { (i, g.nu, g.hu()) } else { (j, g.nv, g.hv()) };
    let at = |m: usize| {
        if along_u {
            f.at(m, j).to_c64()
        } else {
            f.at(i, m).to_c64()
        }
    };
    if k == 0 {
        (at(1) * 4.0 - at(0) * 3.0 - at(2)) / (2.0 * h)
    } else if k == n - 1 {
        (at(n - 1) * 3.0 - at(n - 2) * 4.0 + at(n - 3)) / (2.0 * h)
    } else {
        (at(k + 1) - at(k - 1)) / (2.0 * h)
    }
}

/// ∫(ω_z dz + ω_z̄ dz̄) along the single grid edge a → b.
pub fn edge_integral(
    omega_z: &ComplexField,
    omega_zbar: &ComplexField,
    a: (usize, usize),
    b: (usize, usize),
    quad: Quadrature,
) -> C64 {
    let g = &omega_z.grid;
    let along_u = a.1 == b.1;
    // integrand per unit of the real edge parameter s, and ds
    let (dz_ds, ds) = if along_u {
        (C64::new(1.0, 0.0), if b.0 > a.0 { g.hu() } else { -g.hu() })
    } else {
        (C64::new(0.0, 1.0), if b.1 > a.1 { g.hv() } else { -g.hv() })
    };
    let gval = |(i, j): (usize, usize)| omega_z.at(i, j) * dz_ds + omega_zbar.at(i, j) * dz_ds.conj();
    let mut s = (gval(a) + gval(b)) * (0.5 * ds);
    if quad == Quadrature::EndCorrected {
        let dg = |(i, j): (usize, usize)| {
            tangential(omega_z, i, j, along_u) * dz_ds
                + tangential(omega_zbar, i, j, along_u) * dz_ds.conj()
        };
        s -= (dg(b) - dg(a)) * (ds * ds / 12.0);
    }
    s
}

/// Quadrature of ∫(ω_z dz + ω_z̄ dz̄) along a grid path.
pub fn contour_integral(
    omega_z: &ComplexField,
    omega_zbar: &ComplexField,
    path: &ContourPath,
    quad: Quadrature,
) -> NumResult<C64> {
    if omega_z.grid != omega_zbar.grid {
        return Err(NumError::GridMismatch);
    }
    let g = &omega_z.grid;
    if path.grid_nu != g.nu || path.grid_nv != g.nv {
        return Err(NumError::InvalidPath("path built for a different grid".into()));
    }
    let mut acc = C64::new(0.0, 0.0);
    for w in path.nodes.windows(2) {
        acc += edge_integral(omega_z, omega_zbar, w[0], w[1], quad);
    }
    Ok(acc)
}

/// Named residual statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub name: String,
    pub max: f64,
    pub mean: f64,
    /// Observed order under refinement, when a refinement study was run.
    pub order: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub evaluated: usize,
    pub excluded: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ResidualReport {
    /// Statistics over the values whose mask entry is true. Non-finite
    /// values among them count as failures (max = inf).
    pub fn from_values(
        name: impl Into<String>,
        values: &[f64],
        keep: Option<&[bool]>,
        tolerance: f64,
    ) -> Self {
        let mut max = 0.0f64;
        let mut sum = 0.0;
        let mut n = 0usize;
        let mut excluded = 0usize;
        for (k, &x) in values.iter().enumerate() {
            if keep.map_or(true, |m| m[k]) {
                let a = if x.is_finite() { x.abs() } else { f64::INFINITY };
                max = max.max(a);
                sum += a;
                n += 1;
            } else {
                excluded += 1;
            }
        }
        let mean = if n > 0 { sum / n as f64 } else { 0.0 };
        Self {
            name: name.into(),
            max,
            mean,
            order: None,
            tolerance,
            pass: n > 0 && max <= tolerance,
            evaluated: n,
            excluded,
            notes: Vec::new(),
        }
    }

    /// A single scalar measurement.
    pub fn scalar(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::from_values(name, &[value], None, tolerance)
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order = Some(order);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Same statistics judged against a different tolerance.
    pub fn retol(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.evaluated > 0 && self.max <= tolerance;
        self
    }
}

/// Observed convergence order from errors at spacing h and h/2.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Node mask keeping nodes at least `rings` away from the grid boundary.
pub fn interior_mask(grid: &Grid2, rings: usize) -> Vec<bool> {
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            grid.is_interior(i, j, rings)
        })
        .collect()
}
