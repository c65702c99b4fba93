//! Embedding data of surface patches in the 3-dimensional spaces, including the
//! degenerate co-spaces, and its behaviour under duality and transition.
//!
//! Conventions: the shape operator is `B = dN`, so `II(v,w) = -b(σ_vw, N)`
//! and the outward unit sphere of E³ has `B = +Id`. The normal follows the
//! parametrization: `N ∝ J⁻¹ ⋆(w ∧ σ_u ∧ σ_v)` with `w = σ` (curved spaces) or
//! `w = e₄` (Euc, Min), flipped by [`SurfacePatch::flipped`].

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::forms::BilinearForm;
use crate::numeric::{self, SparseMatrix};
use crate::projective::{ModelSpace, SpaceName};
use crate::transition::{generalized_cross, FamilyKind, TargetGroup, Transition};

/// Tolerance for a patch to lie on the locus.
pub const LOCUS_TOL: f64 = 1e-8;
/// Default grid resolution.
pub const DEFAULT_GRID: usize = 64;

const STEP_1: f64 = 2e-3;
const STEP_2: f64 = 5e-3;

pub type Immersion = Arc<dyn Fn(f64, f64) -> DVector<f64> + Send + Sync>;
pub type JetFn = Arc<dyn Fn(f64, f64) -> Jet + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
/// Value, gradient and Hessian of a function on ℝ³.
pub type DerivFn = Arc<dyn Fn(&DVector<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) + Send + Sync>;

/// Value and derivatives up to order two of an immersion at a parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub x: DVector<f64>,
    pub du: DVector<f64>,
    pub dv: DVector<f64>,
    pub duu: DVector<f64>,
    pub duv: DVector<f64>,
    pub dvv: DVector<f64>,
}

impl Jet {
    fn second(&self, i: usize, j: usize) -> &DVector<f64> {
        match (i, j) {
            (0, 0) => &self.duu,
            (1, 1) => &self.dvv,
            _ => &self.duv,
        }
    }

    fn first(&self, i: usize) -> &DVector<f64> {
        if i == 0 {
            &self.du
        } else {
            &self.dv
        }
    }
}

/// Jet of a map `(u,v) ↦ ℝᵏ` by five-point stencils.
pub fn numeric_jet(f: &(dyn Fn(f64, f64) -> DVector<f64> + Send + Sync), u: f64, v: f64) -> Jet {
    let d1u = |uu: f64, vv: f64, h: f64| numeric::curve_d1(|s| f(s, vv), uu, h);
    Jet {
        x: f(u, v),
        du: d1u(u, v, STEP_1),
        dv: numeric::curve_d1(|s| f(u, s), v, STEP_1),
        duu: numeric::curve_d2(|s| f(s, v), u, STEP_2),
        dvv: numeric::curve_d2(|s| f(u, s), v, STEP_2),
        duv: numeric::curve_d1(|s| d1u(u, s, STEP_2), v, STEP_2),
    }
}

/// Rectangular parameter grid with `n × n` nodes, boundary included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub u: (f64, f64),
    pub v: (f64, f64),
    pub n: usize,
}

impl Grid {
    pub fn new(u: (f64, f64), v: (f64, f64), n: usize) -> Self {
        assert!(n >= 5, "grids need at least 5 nodes per side");
        Self { u, v, n }
    }

    pub fn hu(&self) -> f64 {
        (self.u.1 - self.u.0) / (self.n - 1) as f64
    }

    pub fn hv(&self) -> f64 {
        (self.v.1 - self.v.0) / (self.n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.u.0 + i as f64 * self.hu(), self.v.0 + j as f64 * self.hv())
    }

    pub fn nodes(&self) -> Vec<(f64, f64)> {
        (0..self.n).flat_map(|i| (0..self.n).map(move |j| (i, j))).map(|(i, j)| self.node(i, j)).collect()
    }

    /// Same rectangle with halved spacing.
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n - 1, ..*self }
    }
}

/// Accuracy of grid differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    fn margin(self) -> usize {
        match self {
            FdOrder::Second => 1,
            FdOrder::Fourth => 2,
        }
    }

    fn d1(self) -> &'static [(i64, f64)] {
        match self {
            FdOrder::Second => &[(-1, -0.5), (1, 0.5)],
            FdOrder::Fourth => &[(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)],
        }
    }

    fn d2(self) -> &'static [(i64, f64)] {
        match self {
            FdOrder::Second => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
            FdOrder::Fourth => {
                &[(-2, -1.0 / 12.0), (-1, 16.0 / 12.0), (0, -30.0 / 12.0), (1, 16.0 / 12.0), (2, -1.0 / 12.0)]
            }
        }
    }
}

/// Grid derivative of a scalar field: `(a, b)` counts derivatives in u and v.
fn grid_diff(g: &Grid, f: &dyn Fn(usize) -> f64, i: usize, j: usize, a: usize, b: usize, ord: FdOrder) -> f64 {
    let st = |k: usize| match k {
        0 => &[(0i64, 1.0)][..],
        1 => ord.d1(),
        _ => ord.d2(),
    };
    let mut s = 0.0;
    for &(di, ci) in st(a) {
        for &(dj, cj) in st(b) {
            let ii = (i as i64 + di) as usize;
            let jj = (j as i64 + dj) as usize;
            s += ci * cj * f(g.index(ii, jj));
        }
    }
    s / (g.hu().powi(a as i32) * g.hv().powi(b as i32))
}

fn interior(g: &Grid, ord: FdOrder) -> Vec<(usize, usize)> {
    let m = ord.margin();
    (m..g.n - m).flat_map(|i| (m..g.n - m).map(move |j| (i, j))).collect()
}

/// A parametrized surface in a model space, given in ℝ⁴.
#[derive(Clone)]
pub struct SurfacePatch {
    pub immersion: Immersion,
    pub jet: Option<JetFn>,
    pub u: (f64, f64),
    pub v: (f64, f64),
    pub flip_normal: bool,
}

impl std::fmt::Debug for SurfacePatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfacePatch")
            .field("u", &self.u)
            .field("v", &self.v)
            .field("analytic_jet", &self.jet.is_some())
            .field("flip_normal", &self.flip_normal)
            .finish()
    }
}

impl SurfacePatch {
    pub fn new(f: impl Fn(f64, f64) -> DVector<f64> + Send + Sync + 'static, u: (f64, f64), v: (f64, f64)) -> Self {
        Self { immersion: Arc::new(f), jet: None, u, v, flip_normal: false }
    }

    pub fn with_jet(mut self, j: impl Fn(f64, f64) -> Jet + Send + Sync + 'static) -> Self {
        self.jet = Some(Arc::new(j));
        self
    }

    pub fn flipped(mut self) -> Self {
        self.flip_normal = !self.flip_normal;
        self
    }

    pub fn at(&self, u: f64, v: f64) -> DVector<f64> {
        (self.immersion)(u, v)
    }

    pub fn jet_at(&self, u: f64, v: f64) -> Jet {
        match &self.jet {
            Some(j) => j(u, v),
            None => numeric_jet(self.immersion.as_ref(), u, v),
        }
    }

    pub fn grid(&self, n: usize) -> Grid {
        Grid::new(self.u, self.v, n)
    }

    /// Worst `|sign·b(σ,σ) - 1|` over the grid nodes.
    pub fn locus_defect(&self, space: &ModelSpace, n: usize) -> f64 {
        self.grid(n)
            .nodes()
            .into_iter()
            .map(|(u, v)| {
                let x = self.at(u, v);
                if x.len() != space.form.dim() {
                    return f64::INFINITY;
                }
                (space.sign * space.form.q(&x) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Fundamental forms and shape operator sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingData {
    pub grid: Grid,
    pub space: SpaceName,
    /// `b(N,N)` of the unit normal, 0 in the co-spaces.
    pub normal_sign: f64,
    pub first: Vec<Matrix2<f64>>,
    pub second: Vec<Matrix2<f64>>,
    pub shape: Vec<Matrix2<f64>>,
    pub third: Vec<Matrix2<f64>>,
}

impl EmbeddingData {
    /// Completes `(I, II)` with `B = I⁻¹ II` and `III = Bᵀ I B`.
    pub fn from_forms(
        grid: Grid,
        space: SpaceName,
        normal_sign: f64,
        first: Vec<Matrix2<f64>>,
        second: Vec<Matrix2<f64>>,
    ) -> Result<Self> {
        let shape = first
            .iter()
            .zip(&second)
            .enumerate()
            .map(|(k, (i, ii))| {
                i.try_inverse()
                    .map(|inv| inv * ii)
                    .ok_or_else(|| GeomError::Singular(format!("first fundamental form at node {}", k)))
            })
            .collect::<Result<Vec<_>>>()?;
        let third = first.iter().zip(&shape).map(|(i, b)| b.transpose() * i * b).collect();
        Ok(Self { grid, space, normal_sign, first, second, shape, third })
    }

    /// Completes `(I, B)` with `II = I B`.
    pub fn from_shape(
        grid: Grid,
        space: SpaceName,
        normal_sign: f64,
        first: Vec<Matrix2<f64>>,
        shape: Vec<Matrix2<f64>>,
    ) -> Self {
        let second = first.iter().zip(&shape).map(|(i, b)| i * b).collect();
        let third = first.iter().zip(&shape).map(|(i, b)| b.transpose() * i * b).collect();
        Self { grid, space, normal_sign, first, second, shape, third }
    }

    pub fn extrinsic_curvature(&self) -> Vec<f64> {
        self.shape.iter().map(|b| b.determinant()).collect()
    }

    pub fn mean_curvature(&self) -> Vec<f64> {
        self.shape.iter().map(|b| b.trace()).collect()
    }

    /// `max |II - IIᵀ|`.
    pub fn symmetry_defect(&self) -> f64 {
        self.second.iter().map(|m| (m - m.transpose()).amax()).fold(0.0, f64::max)
    }

    /// `max(|II - I B|, |III - Bᵀ I B|)`.
    pub fn consistency_defect(&self) -> f64 {
        (0..self.first.len())
            .map(|k| {
                let (i, b) = (&self.first[k], &self.shape[k]);
                (self.second[k] - i * b).amax().max((self.third[k] - b.transpose() * i * b).amax())
            })
            .fold(0.0, f64::max)
    }

    /// Sup-norm distance of the shape fields.
    pub fn shape_gap(&self, other: &EmbeddingData) -> f64 {
        self.shape.iter().zip(&other.shape).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max)
    }
}

fn pad(m: &DMatrix<f64>, last: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(m);
    out[(n, n)] = last;
    out
}

fn forms_2x2(metric: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> Matrix2<f64> {
    let q = |x: &DVector<f64>, y: &DVector<f64>| x.dot(&(metric * y));
    let off = q(a, b);
    Matrix2::new(q(a, a), off, off, q(b, b))
}

fn check_spacelike(i: &Matrix2<f64>, at: (f64, f64)) -> Result<()> {
    let scale = i.amax().max(1e-300);
    if !(i[(0, 0)] > 0.0 && i.determinant() > 1e-12 * scale * scale) {
        return Err(GeomError::Precondition(format!(
            "degenerate or non-space-like induced metric at (u,v) = ({}, {})",
            at.0, at.1
        )));
    }
    Ok(())
}

fn require_name(space: &ModelSpace) -> Result<SpaceName> {
    space.name.ok_or_else(|| GeomError::Precondition("surface computations need a named space".into()))
}

fn check_on_locus(space: &ModelSpace, x: &DVector<f64>, at: (f64, f64)) -> Result<()> {
    if x.len() != 4 {
        return Err(GeomError::DimensionMismatch { expected: 4, got: x.len() });
    }
    let d = (space.sign * space.form.q(x) - 1.0).abs();
    if d > LOCUS_TOL {
        return Err(GeomError::NotInSpace {
            space: space.name.map(|n| n.label().to_string()).unwrap_or_default(),
            detail: format!("defect {:e} at (u,v) = ({}, {})", d, at.0, at.1),
        });
    }
    Ok(())
}

/// `(I, II, b(N,N))` at one parameter of a patch in a non-degenerate space.
fn nondegenerate_point(
    space: &ModelSpace,
    name: SpaceName,
    jet: &Jet,
    flip: bool,
    at: (f64, f64),
) -> Result<(Matrix2<f64>, Matrix2<f64>, f64)> {
    let (metric, raise, w) = match name {
        SpaceName::Euc | SpaceName::Min => {
            let a = space.affine_metric().expect("affine metric").matrix().clone();
            let mut e4 = DVector::zeros(4);
            e4[3] = 1.0;
            (pad(&a, 0.0), pad(&a, 1.0), e4)
        }
        _ => (space.form.matrix().clone(), space.form.matrix().clone(), jet.x.clone()),
    };
    let i = forms_2x2(&metric, &jet.du, &jet.dv);
    check_spacelike(&i, at)?;
    let c = generalized_cross(&[w, jet.du.clone(), jet.dv.clone()]);
    let raw = DVector::from_fn(4, |k, _| c[k] / raise[(k, k)]);
    let q = raw.dot(&(&metric * &raw));
    if q.abs() < 1e-14 * raw.norm_squared() {
        return Err(GeomError::Precondition(format!("no unit normal at (u,v) = ({}, {})", at.0, at.1)));
    }
    let s = if flip { -1.0 } else { 1.0 };
    let nrm = raw * (s / q.abs().sqrt());
    let second = Matrix2::from_fn(|a, b| -jet.second(a, b).dot(&(&metric * &nrm)));
    Ok((i, second, q.signum()))
}

/// `(I, II)` at one parameter of a patch in a co-space (II is the
/// T-component of the co-connection derivative).
fn co_point(space: &ModelSpace, jet: &Jet, at: (f64, f64)) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let j = space.form.matrix();
    let eps = space.sign;
    let i = forms_2x2(j, &jet.du, &jet.dv);
    check_spacelike(&i, at)?;
    let base = nalgebra::Matrix3x2::from_fn(|r, c| jet.first(c)[r]);
    let gram = base.transpose() * base;
    let inv = gram.try_inverse().ok_or_else(|| {
        GeomError::Precondition(format!("patch is not a graph over the base at (u,v) = ({}, {})", at.0, at.1))
    })?;
    let mut second = Matrix2::zeros();
    for a in 0..2 {
        for b in a..2 {
            let s = jet.second(a, b);
            let p = s - &jet.x * (eps * s.dot(&(j * &jet.x)));
            let coef = inv * base.transpose() * Vector3::new(p[0], p[1], p[2]);
            let h = p[3] - coef[0] * jet.du[3] - coef[1] * jet.dv[3];
            second[(a, b)] = h;
            second[(b, a)] = h;
        }
    }
    Ok((i, second))
}

/// Embedding data of a patch in Ell, Hyp, dS, AdS, Euc or Min.
pub fn embedding_data(patch: &SurfacePatch, space: &ModelSpace, n: usize) -> Result<EmbeddingData> {
    let name = require_name(space)?;
    if space.is_degenerate() && !matches!(name, SpaceName::Euc | SpaceName::Min) {
        return Err(GeomError::Precondition(format!("{} is degenerate, use embedding_data_co", name.label())));
    }
    let grid = patch.grid(n);
    let pts: Vec<(Matrix2<f64>, Matrix2<f64>, f64)> = grid
        .nodes()
        .into_par_iter()
        .map(|(u, v)| {
            let jet = patch.jet_at(u, v);
            check_on_locus(space, &jet.x, (u, v))?;
            nondegenerate_point(space, name, &jet, patch.flip_normal, (u, v))
        })
        .collect::<Result<_>>()?;
    let sign = pts[0].2;
    if pts.iter().any(|p| p.2 != sign) {
        return Err(GeomError::Precondition("normal changes causal type across the patch".into()));
    }
    let (first, second): (Vec<_>, Vec<_>) = pts.into_iter().map(|(a, b, _)| (a, b)).unzip();
    EmbeddingData::from_forms(grid, name, sign, first, second)
}

/// Embedding data of a space-like graph in coEuc or coMin.
pub fn embedding_data_co(patch: &SurfacePatch, space: &ModelSpace, n: usize) -> Result<EmbeddingData> {
    let name = require_name(space)?;
    if !matches!(name, SpaceName::CoEuc | SpaceName::CoMin) {
        return Err(GeomError::Precondition(format!("{} is not a co-space", name.label())));
    }
    let grid = patch.grid(n);
    let pts: Vec<(Matrix2<f64>, Matrix2<f64>)> = grid
        .nodes()
        .into_par_iter()
        .map(|(u, v)| {
            let jet = patch.jet_at(u, v);
            check_on_locus(space, &jet.x, (u, v))?;
            co_point(space, &jet, (u, v))
        })
        .collect::<Result<_>>()?;
    let (first, second) = pts.into_iter().unzip();
    EmbeddingData::from_forms(grid, name, 0.0, first, second)
}

/// Gaussian curvature of a metric field by Brioschi's formula, at interior
/// nodes (`None` near the boundary).
pub fn gaussian_curvature(grid: &Grid, metric: &[Matrix2<f64>], ord: FdOrder) -> Vec<Option<f64>> {
    let e = |k: usize| metric[k][(0, 0)];
    let f = |k: usize| metric[k][(0, 1)];
    let g = |k: usize| metric[k][(1, 1)];
    let mut out = vec![None; grid.len()];
    for (i, j) in interior(grid, ord) {
        let d = |h: &dyn Fn(usize) -> f64, a, b| grid_diff(grid, h, i, j, a, b, ord);
        let k = grid.index(i, j);
        let (ee, ff, gg) = (e(k), f(k), g(k));
        let (eu, ev) = (d(&e, 1, 0), d(&e, 0, 1));
        let (fu, fv) = (d(&f, 1, 0), d(&f, 0, 1));
        let (gu, gv) = (d(&g, 1, 0), d(&g, 0, 1));
        let (evv, fuv, guu) = (d(&e, 0, 2), d(&f, 1, 1), d(&g, 2, 0));
        let m1 = Matrix3::new(
            -0.5 * evv + fuv - 0.5 * guu,
            0.5 * eu,
            fu - 0.5 * ev,
            fv - 0.5 * gu,
            ee,
            ff,
            0.5 * gv,
            ff,
            gg,
        );
        let m2 = Matrix3::new(0.0, 0.5 * ev, 0.5 * gu, 0.5 * ev, ee, ff, 0.5 * gu, ff, gg);
        let w = ee * gg - ff * ff;
        out[k] = Some((m1.determinant() - m2.determinant()) / (w * w));
    }
    out
}

/// Sup over interior nodes of `|d^∇ B|`, with `∇` the Levi-Civita connection
/// of `metric`.
pub fn codazzi_defect(grid: &Grid, metric: &[Matrix2<f64>], shape: &[Matrix2<f64>], ord: FdOrder) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, j) in interior(grid, ord) {
        let k0 = grid.index(i, j);
        let d = |h: &dyn Fn(usize) -> f64, a, b| grid_diff(grid, h, i, j, a, b, ord);
        // ∂_l I_ab
        let mut di = [[[0.0; 2]; 2]; 2];
        for (l, dl) in di.iter_mut().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    dl[a][b] = d(&|k| metric[k][(a, b)], 1 - l, l);
                }
            }
        }
        let inv = match metric[k0].try_inverse() {
            Some(m) => m,
            None => return f64::INFINITY,
        };
        let gamma = |k: usize, a: usize, b: usize| {
            (0..2).map(|l| 0.5 * inv[(k, l)] * (di[a][b][l] + di[b][a][l] - di[l][a][b])).sum::<f64>()
        };
        for k in 0..2 {
            let mut r = d(&|m| shape[m][(k, 1)], 1, 0) - d(&|m| shape[m][(k, 0)], 0, 1);
            for l in 0..2 {
                r += gamma(k, 0, l) * shape[k0][(l, 1)] - gamma(k, 1, l) * shape[k0][(l, 0)];
            }
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// Right-hand side of the Gauss equation of a space.
pub fn gauss_rhs(space: SpaceName, det_b: f64) -> f64 {
    match space {
        SpaceName::Euc => det_b,
        SpaceName::Min => -det_b,
        SpaceName::Ell => 1.0 + det_b,
        SpaceName::Hyp => -1.0 + det_b,
        SpaceName::DS => 1.0 - det_b,
        SpaceName::AdS => -1.0 - det_b,
        SpaceName::CoEuc => 1.0,
        SpaceName::CoMin => -1.0,
    }
}

/// Sup-norm Gauss and Codazzi residuals with second-order grid differences.
pub fn gauss_codazzi_residual(data: &EmbeddingData) -> (f64, f64) {
    gauss_codazzi_residual_with(data, FdOrder::Second)
}

pub fn gauss_codazzi_residual_with(data: &EmbeddingData, ord: FdOrder) -> (f64, f64) {
    let k = gaussian_curvature(&data.grid, &data.first, ord);
    let gauss = k
        .iter()
        .zip(&data.shape)
        .filter_map(|(k, b)| k.map(|k| (k - gauss_rhs(data.space, b.determinant())).abs()))
        .fold(0.0, f64::max);
    (gauss, codazzi_defect(&data.grid, &data.first, &data.shape, ord))
}

/// Space dual to `s` for convex surfaces.
pub fn dual_space(s: SpaceName) -> SpaceName {
    match s {
        SpaceName::Euc => SpaceName::CoEuc,
        SpaceName::CoEuc => SpaceName::Euc,
        SpaceName::Min => SpaceName::CoMin,
        SpaceName::CoMin => SpaceName::Min,
        SpaceName::Hyp => SpaceName::DS,
        SpaceName::DS => SpaceName::Hyp,
        SpaceName::Ell => SpaceName::Ell,
        SpaceName::AdS => SpaceName::AdS,
    }
}

fn normal_sign_of(s: SpaceName) -> f64 {
    match s {
        SpaceName::Euc | SpaceName::Ell | SpaceName::Hyp => 1.0,
        SpaceName::Min | SpaceName::DS | SpaceName::AdS => -1.0,
        SpaceName::CoEuc | SpaceName::CoMin => 0.0,
    }
}

/// `(III, B⁻¹)`, the embedding data of the dual surface.
pub fn dual_embedding_data(data: &EmbeddingData) -> Result<EmbeddingData> {
    let mut shape = Vec::with_capacity(data.shape.len());
    for (k, b) in data.shape.iter().enumerate() {
        let (det, tr) = (b.determinant(), b.trace());
        if !(det > 0.0 && tr > 0.0) {
            return Err(GeomError::Precondition(format!(
                "shape operator not positive definite at node {} (det {:e}, trace {:e})",
                k, det, tr
            )));
        }
        shape.push(b.try_inverse().ok_or_else(|| GeomError::Singular(format!("shape operator at node {}", k)))?);
    }
    let space = dual_space(data.space);
    Ok(EmbeddingData::from_shape(data.grid, space, normal_sign_of(space), data.third.clone(), shape))
}

/// Base of a co-space graph: the round sphere or the hyperbolic plane in ℝ³.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    Sphere,
    Hyperbolic,
}

impl Base {
    pub fn form(self) -> BilinearForm {
        match self {
            Base::Sphere => BilinearForm::standard(3, 0),
            Base::Hyperbolic => BilinearForm::standard(2, 1),
        }
    }

    /// `b(x,x)` on the base.
    pub fn eps(self) -> f64 {
        match self {
            Base::Sphere => 1.0,
            Base::Hyperbolic => -1.0,
        }
    }

    pub fn space(self) -> SpaceName {
        match self {
            Base::Sphere => SpaceName::CoEuc,
            Base::Hyperbolic => SpaceName::CoMin,
        }
    }

    /// Central chart `(a,b) ↦ y/√(ε b(y,y))`, `y = (a,b,1)`.
    pub fn chart(self, a: f64, b: f64) -> DVector<f64> {
        let y = DVector::from_vec(vec![a, b, 1.0]);
        let q = self.eps() * self.form().q(&y);
        &y / q.sqrt()
    }

    /// Analytic jet of [`Base::chart`].
    pub fn chart_jet(self, a: f64, b: f64) -> Jet {
        let j = self.form();
        let y = Vector3::new(a, b, 1.0);
        let jy = Vector3::new(y[0] * j.matrix()[(0, 0)], y[1] * j.matrix()[(1, 1)], y[2] * j.matrix()[(2, 2)]);
        let eps = self.eps();
        let g = (eps * y.dot(&jy)).powf(-0.5);
        let dg = [-g.powi(3) * eps * jy[0], -g.powi(3) * eps * jy[1]];
        let ddg = |p: usize, q: usize| 3.0 * g.powi(5) * jy[p] * jy[q] - g.powi(3) * eps * j.matrix()[(p, q)];
        let e = |k: usize| Vector3::from_fn(|r, _| if r == k { 1.0 } else { 0.0 });
        let d1 = |p: usize| e(p) * g + y * dg[p];
        let d2 = |p: usize, q: usize| e(p) * dg[q] + e(q) * dg[p] + y * ddg(p, q);
        let v = |x: Vector3<f64>| DVector::from_column_slice(x.as_slice());
        Jet { x: v(y * g), du: v(d1(0)), dv: v(d1(1)), duu: v(d2(0, 0)), duv: v(d2(0, 1)), dvv: v(d2(1, 1)) }
    }

    /// 1-homogeneous extension of `u` to the cone over the base.
    pub fn homogeneous(self, u: &ScalarFn, y: &DVector<f64>) -> f64 {
        let r = (self.eps() * self.form().q(y)).sqrt();
        r * u(&(y / r))
    }
}

/// Smooth test function `c + ⟨l,x⟩ + Σ aₖ sin(⟨ωₖ,x⟩ + φₖ)` plus an optional
/// radial solution of `Δu = 2u` on H² centred at `zmc_center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSpec {
    pub constant: f64,
    #[serde(default)]
    pub linear: [f64; 3],
    #[serde(default)]
    pub waves: Vec<Wave>,
    #[serde(default)]
    pub zmc_center: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amplitude: f64,
    pub frequency: [f64; 3],
    pub phase: f64,
}

impl SupportSpec {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, linear: [0.0; 3], waves: vec![], zmc_center: None }
    }

    pub fn random<R: Rng>(rng: &mut R, constant: f64, scale: f64) -> Self {
        let waves = (0..3)
            .map(|_| Wave {
                amplitude: scale * rng.gen_range(-1.0..1.0),
                frequency: [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)],
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        let linear = [0.0; 3].map(|_: f64| scale * rng.gen_range(-1.0..1.0));
        Self { constant, linear, waves, zmc_center: None }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let lin: f64 = (0..3).map(|k| self.linear[k] * x[k]).sum();
        let waves: f64 = self
            .waves
            .iter()
            .map(|w| w.amplitude * ((0..3).map(|k| w.frequency[k] * x[k]).sum::<f64>() + w.phase).sin())
            .sum();
        let zmc = self.zmc_center.map_or(0.0, |p| {
            let ch = -(x[0] * p[0] + x[1] * p[1] - x[2] * p[2]);
            let r = ch.acosh();
            ch * (0.5 * r).tanh().ln() + 1.0
        });
        self.constant + lin + waves + zmc
    }

    /// Value, gradient and Hessian of the defining formula on ℝ³.
    pub fn derivatives(&self, x: &DVector<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
        let mut grad = Vector3::from_column_slice(&self.linear);
        let mut hess = Matrix3::zeros();
        for w in &self.waves {
            let om = Vector3::from_column_slice(&w.frequency);
            let th = (0..3).map(|k| om[k] * x[k]).sum::<f64>() + w.phase;
            grad += om * (w.amplitude * th.cos());
            hess -= om * om.transpose() * (w.amplitude * th.sin());
        }
        if let Some(p) = self.zmc_center {
            // u = f(c), c = -b(x,p), f(c) = c/2 ln((c-1)/(c+1)) + 1
            let c = -(x[0] * p[0] + x[1] * p[1] - x[2] * p[2]);
            let dc = Vector3::new(-p[0], -p[1], p[2]);
            let f1 = 0.5 * ((c - 1.0) / (c + 1.0)).ln() + c / (c * c - 1.0);
            let f2 = -2.0 / (c * c - 1.0).powi(2);
            grad += dc * f1;
            hess += dc * dc.transpose() * f2;
        }
        (self.eval(x), grad, hess)
    }

    pub fn derivative_fn(&self) -> DerivFn {
        let s = self.clone();
        Arc::new(move |x| s.derivatives(x))
    }

    pub fn function(&self) -> ScalarFn {
        let s = self.clone();
        Arc::new(move |x| s.eval(x))
    }
}

/// A graph `x ↦ (x, u(x))` over a chart square of the base.
#[derive(Clone)]
pub struct SupportGraph {
    pub base: Base,
    pub u: ScalarFn,
    /// Ambient derivatives of `u`, when known in closed form.
    pub derivatives: Option<DerivFn>,
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl std::fmt::Debug for SupportGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SupportGraph").field("base", &self.base).field("a", &self.a).field("b", &self.b).finish()
    }
}

impl SupportGraph {
    pub fn new(base: Base, u: ScalarFn, a: (f64, f64), b: (f64, f64)) -> Self {
        Self { base, u, derivatives: None, a, b }
    }

    pub fn from_spec(base: Base, spec: &SupportSpec, half_width: f64) -> Self {
        let mut g = Self::new(base, spec.function(), (-half_width, half_width), (-half_width, half_width));
        g.derivatives = Some(spec.derivative_fn());
        g
    }

    pub fn patch(&self) -> SurfacePatch {
        let (base, u) = (self.base, self.u.clone());
        let patch = SurfacePatch::new(
            move |a, b| {
                let x = base.chart(a, b);
                let h = u(&x);
                DVector::from_vec(vec![x[0], x[1], x[2], h])
            },
            self.a,
            self.b,
        );
        match self.derivatives.clone() {
            None => patch,
            Some(du) => patch.with_jet(move |a, b| {
                let c = base.chart_jet(a, b);
                let (h, grad, hess) = du(&c.x);
                let v3 = |x: &DVector<f64>| Vector3::new(x[0], x[1], x[2]);
                let lift = |x: &DVector<f64>, last: f64| DVector::from_vec(vec![x[0], x[1], x[2], last]);
                let h1 = |x: &DVector<f64>| grad.dot(&v3(x));
                let h2 = |p: &DVector<f64>, q: &DVector<f64>, pq: &DVector<f64>| {
                    v3(p).dot(&(hess * v3(q))) + grad.dot(&v3(pq))
                };
                Jet {
                    x: lift(&c.x, h),
                    du: lift(&c.du, h1(&c.du)),
                    dv: lift(&c.dv, h1(&c.dv)),
                    duu: lift(&c.duu, h2(&c.du, &c.du, &c.duu)),
                    duv: lift(&c.duv, h2(&c.du, &c.dv, &c.duv)),
                    dvv: lift(&c.dvv, h2(&c.dv, &c.dv, &c.dvv)),
                }
            }),
        }
    }

    pub fn grid(&self, n: usize) -> Grid {
        Grid::new(self.a, self.b, n)
    }
}

fn ambient_hessian(f: &dyn Fn(&DVector<f64>) -> f64, y: &DVector<f64>) -> Matrix3<f64> {
    let h = STEP_2;
    let e = |k: usize| {
        let mut v = DVector::zeros(3);
        v[k] = 1.0;
        v
    };
    let d1 = |z: &DVector<f64>, k: usize| {
        let ek = e(k);
        let at = |s: f64| f(&(z + &ek * (s * h)));
        (8.0 * (at(1.0) - at(-1.0)) - at(2.0) + at(-2.0)) / (12.0 * h)
    };
    let mut m = Matrix3::zeros();
    for a in 0..3 {
        let ea = e(a);
        let at = |s: f64| f(&(y + &ea * (s * h)));
        m[(a, a)] = (-(at(2.0) + at(-2.0)) + 16.0 * (at(1.0) + at(-1.0)) - 30.0 * at(0.0)) / (12.0 * h * h);
        for b in a + 1..3 {
            let at = |s: f64| d1(&(y + &ea * (s * h)), b);
            let v = (8.0 * (at(1.0) - at(-1.0)) - at(2.0) + at(-2.0)) / (12.0 * h);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    m
}

/// Shape operator of a co-space graph through the ambient Hessian of the
/// 1-homogeneous extension: `Hess U = Hess u ± u Id` on the base.
pub fn shape_from_support(graph: &SupportGraph, n: usize) -> Vec<Matrix2<f64>> {
    let grid = graph.grid(n);
    let base = graph.base;
    let form = base.form();
    grid.nodes()
        .into_par_iter()
        .map(|(a, b)| {
            let jet = base.chart_jet(a, b);
            let x = &jet.x;
            let i = forms_2x2(form.matrix(), &jet.du, &jet.dv);
            // Hess U on tangent vectors is Hess u + ε (u - ⟨∇u, x⟩) b
            let (h, shift) = match &graph.derivatives {
                Some(d) => {
                    let (val, grad, hess) = d(x);
                    (hess, base.eps() * (val - grad.dot(&Vector3::new(x[0], x[1], x[2]))))
                }
                None => (ambient_hessian(&|y| base.homogeneous(&graph.u, y), x), 0.0),
            };
            let ii = Matrix2::from_fn(|p, q| {
                let (vp, vq) = (jet.first(p), jet.first(q));
                Vector3::new(vp[0], vp[1], vp[2]).dot(&(h * Vector3::new(vq[0], vq[1], vq[2])))
            }) + i * shift;
            i.try_inverse().expect("chart is an immersion") * ii
        })
        .collect()
}

pub fn shape_from_support_coe(graph: &SupportGraph, n: usize) -> Result<Vec<Matrix2<f64>>> {
    if graph.base != Base::Sphere {
        return Err(GeomError::Precondition("co-Euclidean graphs live over the sphere".into()));
    }
    Ok(shape_from_support(graph, n))
}

pub fn shape_from_support_comin(graph: &SupportGraph, n: usize) -> Result<Vec<Matrix2<f64>>> {
    if graph.base != Base::Hyperbolic {
        return Err(GeomError::Precondition("co-Minkowski graphs live over the hyperbolic plane".into()));
    }
    Ok(shape_from_support(graph, n))
}

/// Outcome of [`recover_support_from_shape`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportRecovery {
    /// `u` at the grid nodes, orthogonal to the linear functions.
    pub values: Vec<f64>,
    /// Sup gap between `B` and the discrete `Hess u ± u Id` of the solution.
    pub forward_gap: f64,
    pub iterations: usize,
}

/// Threshold on the Codazzi defect for support recovery.
pub const RECOVERY_CODAZZI_TOL: f64 = 1e-5;

/// Least-squares solution `u` of `Hess u + ε u Id = B` on a chart square,
/// gauge-fixed against the linear functions.
pub fn recover_support_from_shape(base: Base, grid: Grid, shape: &[Matrix2<f64>]) -> Result<SupportRecovery> {
    if shape.len() != grid.len() {
        return Err(GeomError::DimensionMismatch { expected: grid.len(), got: shape.len() });
    }
    let form = base.form();
    let nodes = grid.nodes();
    let jets: Vec<Jet> = nodes.iter().map(|&(a, b)| base.chart_jet(a, b)).collect();
    let first: Vec<Matrix2<f64>> = jets.iter().map(|j| forms_2x2(form.matrix(), &j.du, &j.dv)).collect();
    for (k, (i, b)) in first.iter().zip(shape).enumerate() {
        let ii = i * b;
        if (ii - ii.transpose()).amax() > 1e-8 * ii.amax().max(1.0) {
            return Err(GeomError::Precondition(format!("shape operator not self-adjoint at node {}", k)));
        }
    }
    let cod = codazzi_defect(&grid, &first, shape, FdOrder::Fourth);
    if cod > RECOVERY_CODAZZI_TOL {
        return Err(GeomError::Tolerance {
            what: "Codazzi defect of the shape field".into(),
            value: cod,
            tol: RECOVERY_CODAZZI_TOL,
        });
    }
    // Christoffel symbols of the chart metric, from the chart itself
    let gamma: Vec<[[[f64; 2]; 2]; 2]> = jets
        .iter()
        .zip(&first)
        .map(|(j, i)| {
            let inv = i.try_inverse().expect("chart metric");
            let mut g = [[[0.0; 2]; 2]; 2];
            for p in 0..2 {
                for q in 0..2 {
                    let lower = Vector3::new(form.b(j.second(p, q), &j.du), form.b(j.second(p, q), &j.dv), 0.0);
                    for k in 0..2 {
                        g[k][p][q] = inv[(k, 0)] * lower[0] + inv[(k, 1)] * lower[1];
                    }
                }
            }
            g
        })
        .collect();
    let eps = base.eps();
    let pairs = [(0usize, 0usize), (0, 1), (1, 1)];
    let stencil = |i: usize, j: usize, p: usize, q: usize| -> Vec<(usize, f64)> {
        let k0 = grid.index(i, j);
        let mut out = Vec::new();
        let mut push = |a: usize, b: usize, w: f64| {
            let (si, sj) = (window_weights(i, grid.n, a), window_weights(j, grid.n, b));
            let scale = grid.hu().powi(a as i32) * grid.hv().powi(b as i32);
            for &(ii, ci) in &si {
                for &(jj, cj) in &sj {
                    out.push((grid.index(ii, jj), w * ci * cj / scale));
                }
            }
        };
        let (a, b) = match (p, q) {
            (0, 0) => (2, 0),
            (1, 1) => (0, 2),
            _ => (1, 1),
        };
        push(a, b, 1.0);
        push(1, 0, -gamma[k0][0][p][q]);
        push(0, 1, -gamma[k0][1][p][q]);
        out.push((k0, eps * first[k0][(p, q)]));
        out
    };
    let eq_nodes: Vec<(usize, usize)> = (0..grid.n).flat_map(|i| (0..grid.n).map(move |j| (i, j))).collect();
    let mut trip = Vec::new();
    let mut rhs = Vec::new();
    let mut row = 0;
    for &(i, j) in &eq_nodes {
        let k0 = grid.index(i, j);
        let target = first[k0] * shape[k0];
        for &(p, q) in &pairs {
            for (c, w) in stencil(i, j, p, q) {
                trip.push((row, c, w));
            }
            rhs.push(target[(p, q)]);
            row += 1;
        }
    }
    // gauge: orthogonality to the three linear functions
    let gw = 1.0 / grid.n as f64;
    for k in 0..3 {
        for (idx, &(a, b)) in nodes.iter().enumerate() {
            trip.push((row, idx, gw * base.chart(a, b)[k]));
        }
        rhs.push(0.0);
        row += 1;
    }
    let a = SparseMatrix::from_triplets(row, grid.len(), &trip);
    let out = numeric::cgls(&a, &rhs, 1e-13, 50_000);
    let applied = a.mul(&out.x);
    let mut gap: f64 = 0.0;
    for (e, &(i, j)) in eq_nodes.iter().enumerate() {
        let k0 = grid.index(i, j);
        let m = Matrix2::new(applied[3 * e], applied[3 * e + 1], applied[3 * e + 1], applied[3 * e + 2]);
        let b = first[k0].try_inverse().expect("chart metric") * m;
        gap = gap.max((b - shape[k0]).amax());
    }
    log::debug!("support recovery: {} CGLS iterations, normal residual {:e}", out.iterations, out.normal_residual);
    Ok(SupportRecovery { values: out.x, forward_gap: gap, iterations: out.iterations })
}

/// Finite-difference weights for the `m`-th derivative at `x0` from samples
/// at `xs` (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=m.min(i)).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=m.min(i)).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Fourth-order weights in unit spacing for the `m`-th derivative at node
/// `i` of `n`, shifting the window inside the grid near the ends.
fn window_weights(i: usize, n: usize, m: usize) -> Vec<(usize, f64)> {
    if m == 0 {
        return vec![(i, 1.0)];
    }
    let width = if m == 2 && (i < 2 || i + 2 >= n) { 6 } else { 5 };
    let start = i.saturating_sub(2).min(n - width);
    let xs: Vec<f64> = (start..start + width).map(|k| k as f64).collect();
    fornberg_weights(i as f64, &xs, m).into_iter().enumerate().map(|(k, w)| (start + k, w)).collect()
}

/// Removes the least-squares linear part `⟨x,p⟩` from node values.
pub fn remove_linear_part(base: Base, grid: &Grid, values: &[f64]) -> Vec<f64> {
    let nodes = grid.nodes();
    let m = DMatrix::from_fn(nodes.len(), 3, |r, c| base.chart(nodes[r].0, nodes[r].1)[c]);
    let y = DVector::from_column_slice(values);
    let coef = m.clone().svd(true, true).solve(&y, 1e-14).expect("svd solve");
    (y - m * coef).iter().copied().collect()
}

/// Tolerance for a developing map to be isometric.
pub const DEV_TOL: f64 = 1e-6;

/// The graph immersion `x ↦ (dev(x), u(x))`, after checking that `dev` is a
/// local isometry onto the base for the metric `first`.
pub fn immersion_from_data_co(
    base: Base,
    dev: impl Fn(f64, f64) -> DVector<f64> + Send + Sync + 'static,
    u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    first: &dyn Fn(f64, f64) -> Matrix2<f64>,
    grid: Grid,
) -> Result<SurfacePatch> {
    let form = base.form();
    for (a, b) in grid.nodes() {
        let jet = numeric_jet(&dev, a, b);
        let d = (form.q(&jet.x) - base.eps()).abs();
        if d > LOCUS_TOL {
            return Err(GeomError::NotInSpace { space: format!("{:?}", base), detail: format!("defect {:e}", d) });
        }
        let gap = (forms_2x2(form.matrix(), &jet.du, &jet.dv) - first(a, b)).amax();
        if gap > DEV_TOL {
            return Err(GeomError::Tolerance {
                what: format!("pullback metric at ({}, {})", a, b),
                value: gap,
                tol: DEV_TOL,
            });
        }
    }
    Ok(SurfacePatch::new(
        move |a, b| {
            let x = dev(a, b);
            DVector::from_vec(vec![x[0], x[1], x[2], u(a, b)])
        },
        grid.u,
        grid.v,
    ))
}

fn sphere_param(u: f64, v: f64) -> [Vector3<f64>; 6] {
    let (su, cu, sv, cv) = (u.sin(), u.cos(), v.sin(), v.cos());
    [
        Vector3::new(cv * cu, cv * su, sv),
        Vector3::new(-cv * su, cv * cu, 0.0),
        Vector3::new(-sv * cu, -sv * su, cv),
        Vector3::new(-cv * cu, -cv * su, 0.0),
        Vector3::new(sv * su, -sv * cu, 0.0),
        Vector3::new(-cv * cu, -cv * su, -sv),
    ]
}

fn hyperbolic_param(u: f64, v: f64) -> [Vector3<f64>; 6] {
    let (su, cu, sv, cv) = (u.sinh(), u.cosh(), v.sinh(), v.cosh());
    [
        Vector3::new(cv * su, sv, cv * cu),
        Vector3::new(cv * cu, 0.0, cv * su),
        Vector3::new(sv * su, cv, sv * cu),
        Vector3::new(cv * su, 0.0, cv * cu),
        Vector3::new(sv * cu, 0.0, sv * su),
        Vector3::new(cv * su, sv, cv * cu),
    ]
}

/// The round "sphere" of radius `r` around a point of each non-degenerate
/// space, with analytic derivatives and the normal `∂_r σ`.
///
/// Shape operators: Euc, Min `1/r`; Ell `cot r`; Hyp `coth r`; dS `tanh r`;
/// AdS `-tan r`.
pub fn canonical_patch(space: SpaceName, r: f64) -> Result<SurfacePatch> {
    // σ = (α φ, β) with φ on S² or H²; the radial derivative is (α' φ, β').
    let (hyperbolic, alpha, beta, dalpha, dbeta) = match space {
        SpaceName::Euc => (false, r, 1.0, 1.0, 0.0),
        SpaceName::Min => (true, r, 1.0, 1.0, 0.0),
        SpaceName::Ell => (false, r.sin(), r.cos(), r.cos(), -r.sin()),
        SpaceName::Hyp => (false, r.sinh(), r.cosh(), r.cosh(), r.sinh()),
        SpaceName::DS => (false, r.cosh(), r.sinh(), r.sinh(), r.cosh()),
        SpaceName::AdS => (true, r.cos(), r.sin(), -r.sin(), r.cos()),
        _ => return Err(GeomError::Precondition(format!("no canonical patch in {}", space.label()))),
    };
    let param = if hyperbolic { hyperbolic_param } else { sphere_param };
    let lift = move |p: &Vector3<f64>, a: f64, last: f64| DVector::from_vec(vec![a * p[0], a * p[1], a * p[2], last]);
    let jet = move |u: f64, v: f64| {
        let p = param(u, v);
        Jet {
            x: lift(&p[0], alpha, beta),
            du: lift(&p[1], alpha, 0.0),
            dv: lift(&p[2], alpha, 0.0),
            duu: lift(&p[3], alpha, 0.0),
            duv: lift(&p[4], alpha, 0.0),
            dvv: lift(&p[5], alpha, 0.0),
        }
    };
    let patch =
        SurfacePatch::new(move |u, v| lift(&param(u, v)[0], alpha, beta), (-0.6, 0.6), (-0.6, 0.6)).with_jet(jet);
    // orient the normal along ∂_r σ
    let ms = ModelSpace::named(space, 3);
    let j0 = patch.jet_at(0.0, 0.0);
    let w = match space {
        SpaceName::Euc | SpaceName::Min => DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]),
        _ => j0.x.clone(),
    };
    let raise = match space {
        SpaceName::Euc | SpaceName::Min => pad(ms.affine_metric().expect("affine").matrix(), 1.0),
        _ => ms.form.matrix().clone(),
    };
    let c = generalized_cross(&[w, j0.du.clone(), j0.dv.clone()]);
    let nrm = DVector::from_fn(4, |k, _| c[k] / raise[(k, k)]);
    let radial = lift(&param(0.0, 0.0)[0], dalpha, dbeta);
    Ok(if nrm.dot(&radial) < 0.0 { patch.flipped() } else { patch })
}

/// Expected constant shape operator of [`canonical_patch`].
pub fn canonical_shape(space: SpaceName, r: f64) -> f64 {
    match space {
        SpaceName::Euc | SpaceName::Min => 1.0 / r,
        SpaceName::Ell => 1.0 / r.tan(),
        SpaceName::Hyp => 1.0 / r.tanh(),
        SpaceName::DS => r.tanh(),
        SpaceName::AdS => -r.tan(),
        _ => f64::NAN,
    }
}

/// A family `(t, u, v) ↦ σ_t(u, v)` in the adapted coordinates of a
/// transition.
pub type SurfaceFamily = Arc<dyn Fn(f64, f64, f64) -> DVector<f64> + Send + Sync>;

fn base_of(tr: &Transition) -> Result<Base> {
    if tr.family.kind != FamilyKind::BlowUpHyperplane {
        return Err(GeomError::Precondition("surface transitions blow up a plane".into()));
    }
    Ok(match tr.target {
        TargetGroup::IsomCoEuc => Base::Sphere,
        _ => Base::Hyperbolic,
    })
}

/// The family `σ_t = (x, t u(x) + t² w(x)) / norm` over a chart square of the
/// blown-up plane, normalized onto the source locus.
pub fn normalized_graph_family(tr: &Transition, u: ScalarFn, w: Option<ScalarFn>) -> Result<SurfaceFamily> {
    let base = base_of(tr)?;
    let form = tr.form().clone();
    let sign = tr.space.sign;
    Ok(Arc::new(move |t, a, b| {
        let x = base.chart(a, b);
        let h = t * u(&x) + t * t * w.as_ref().map_or(0.0, |w| w(&x));
        let y = DVector::from_vec(vec![x[0], x[1], x[2], h]);
        let q = sign * form.q(&y);
        if q > 0.0 {
            y / q.sqrt()
        } else {
            y.map(|_| f64::NAN)
        }
    }))
}

/// `(I_t, II_t/t, B_t/t)` at one parameter, with the normal converging to
/// `+e₄` and `II_t = b(N,N) b(σ_uv, N)`.
///
/// Everything is evaluated on the rescaled immersion `g_t σ_t`, where
/// `b(σ_ij, N_t) = t b(ŝ_ij, Ñ)` holds exactly, so no cancellation occurs as
/// `t → 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledData {
    pub first: Matrix2<f64>,
    pub second: Matrix2<f64>,
    pub shape: Matrix2<f64>,
}

pub fn rescaled_data_at(family: &SurfaceFamily, tr: &Transition, t: f64, u: f64, v: f64) -> Result<RescaledData> {
    base_of(tr)?;
    let f = family.clone();
    let hat = move |a: f64, b: f64| {
        let mut y = f(t, a, b);
        y[3] /= t;
        y
    };
    let jet = numeric_jet(&hat, u, v);
    if jet.x.iter().any(|c| !c.is_finite()) {
        return Err(GeomError::Precondition(format!("family undefined at t = {}", t)));
    }
    let j = tr.form().matrix();
    let unscale = |y: &DVector<f64>| {
        let mut z = y.clone();
        z[3] *= t;
        z
    };
    let first = forms_2x2(j, &unscale(&jet.du), &unscale(&jet.dv));
    let c = generalized_cross(&[jet.x.clone(), jet.du.clone(), jet.dv.clone()]);
    let mut nt = DVector::from_fn(4, |k, _| c[k] / j[(k, k)]);
    if nt[3] < 0.0 {
        nt = -nt;
    }
    // N_t = (t M, n₄) when Ñ = (M, n₄)
    let mut full = nt.clone();
    for k in 0..3 {
        full[k] *= t;
    }
    let q = full.dot(&(j * &full));
    let nt = nt / q.abs().sqrt();
    let sign = q.signum();
    let second = Matrix2::from_fn(|a, b| sign * jet.second(a, b).dot(&(j * &nt)));
    let shape = first.try_inverse().ok_or_else(|| GeomError::Singular(format!("I_t at ({}, {})", u, v)))? * second;
    Ok(RescaledData { first, second, shape })
}

/// Limit data of a surface transition.
#[derive(Debug, Clone)]
pub struct SurfaceTransition {
    pub data: EmbeddingData,
    /// `lim K_t / t²`.
    pub extrinsic: Vec<f64>,
    /// Largest Richardson error estimate over the grid.
    pub error: f64,
    /// The rescaled limit immersion in the co-space.
    pub limit: SurfacePatch,
}

/// `(I, II, B, K^ext) = lim (I_t, II_t/t, B_t/t, K_t/t²)` on a grid.
pub fn surface_transition(
    family: &SurfaceFamily,
    tr: &Transition,
    u: (f64, f64),
    v: (f64, f64),
    n: usize,
) -> Result<SurfaceTransition> {
    let base = base_of(tr)?;
    let grid = Grid::new(u, v, n);
    for (a, b) in grid.nodes() {
        let z = family(0.0, a, b)[3];
        if z.abs() > LOCUS_TOL {
            return Err(GeomError::Precondition(format!("σ₀ leaves the plane at ({}, {}): {:e}", a, b, z)));
        }
    }
    let pts: Vec<(Matrix2<f64>, Matrix2<f64>, f64, f64)> = grid
        .nodes()
        .into_par_iter()
        .map(|(a, b)| {
            let samples: Vec<DVector<f64>> = numeric::schedule()
                .into_iter()
                .map(|t| {
                    let d = rescaled_data_at(family, tr, t, a, b)?;
                    let (i, ii) = (d.first, d.second);
                    Ok(DVector::from_vec(vec![
                        i[(0, 0)],
                        i[(0, 1)],
                        i[(1, 1)],
                        ii[(0, 0)],
                        ii[(0, 1)],
                        ii[(1, 1)],
                        d.shape.determinant(),
                    ]))
                })
                .collect::<Result<_>>()?;
            let lim = numeric::richardson(&samples, 1);
            let l = &lim.value;
            let i = Matrix2::new(l[0], l[1], l[1], l[2]);
            let ii = Matrix2::new(l[3], l[4], l[4], l[5]);
            Ok((i, ii, l[6], lim.error))
        })
        .collect::<Result<_>>()?;
    let error = pts.iter().map(|p| p.3).fold(0.0, f64::max);
    let extrinsic = pts.iter().map(|p| p.2).collect();
    let (first, second): (Vec<_>, Vec<_>) = pts.into_iter().map(|(a, b, _, _)| (a, b)).unzip();
    let data = EmbeddingData::from_forms(grid, base.space(), 0.0, first, second)?;
    let f = family.clone();
    let limit = SurfacePatch::new(
        move |a, b| {
            numeric::limit_at_zero(|t| {
                let mut y = f(t, a, b);
                y[3] /= t;
                y
            })
            .value
        },
        u,
        v,
    );
    Ok(SurfaceTransition { data, extrinsic, error, limit })
}

/// Sup over the grid of `|II_t/t - II|` for the limit data `lim`.
pub fn transition_rate_gap(family: &SurfaceFamily, tr: &Transition, lim: &EmbeddingData, t: f64) -> Result<f64> {
    let grid = lim.grid;
    let gaps: Vec<f64> = grid
        .nodes()
        .into_par_iter()
        .enumerate()
        .map(|(k, (a, b))| Ok((rescaled_data_at(family, tr, t, a, b)?.second - lim.second[k]).amax()))
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}
