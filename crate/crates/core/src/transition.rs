//! Conjugacy limits under diagonal rescalings.
//!
//! A blow-up of a point uses `g_t = diag(1/t, …, 1/t, 1)` and fixes
//! `e_{n+1}`; a blow-up of a hyperplane uses `g_t = diag(1, …, 1, 1/t)` and
//! fixes `{x_{n+1} = 0}`. Sources are put in adapted coordinates (see
//! [`Transition::adapted`]) so that the fixed locus is always the same.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::forms::{AmbientVector, BilinearForm};
use crate::numeric::{self, Limit};
use crate::projective::{ModelSpace, ProjPoint, SpaceName};

/// Tolerance for the base condition of a path.
pub const BASE_TOL: f64 = 1e-9;
/// Default tolerance of [`limit_group_membership`].
pub const GROUP_TOL: f64 = 1e-8;
/// Tolerance of [`duality_transition_check`].
pub const DUALITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    BlowUpPoint,
    BlowUpHyperplane,
}

impl FamilyKind {
    pub fn other(self) -> Self {
        match self {
            FamilyKind::BlowUpPoint => FamilyKind::BlowUpHyperplane,
            FamilyKind::BlowUpHyperplane => FamilyKind::BlowUpPoint,
        }
    }
}

/// The diagonal family `g_t` acting on ℝ^{dim}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RescalingFamily {
    pub kind: FamilyKind,
    /// Ambient dimension n+1.
    pub dim: usize,
}

impl RescalingFamily {
    pub fn new(kind: FamilyKind, dim: usize) -> Self {
        assert!(dim >= 2, "ambient dimension must be at least 2");
        Self { kind, dim }
    }

    pub fn point(dim: usize) -> Self {
        Self::new(FamilyKind::BlowUpPoint, dim)
    }

    pub fn hyperplane(dim: usize) -> Self {
        Self::new(FamilyKind::BlowUpHyperplane, dim)
    }

    /// Diagonal of `g_t`.
    pub fn diag(&self, t: f64) -> DVector<f64> {
        let n = self.dim - 1;
        DVector::from_fn(self.dim, |i, _| match (self.kind, i == n) {
            (FamilyKind::BlowUpPoint, false) => 1.0 / t,
            (FamilyKind::BlowUpPoint, true) => 1.0,
            (FamilyKind::BlowUpHyperplane, false) => 1.0,
            (FamilyKind::BlowUpHyperplane, true) => 1.0 / t,
        })
    }

    pub fn g(&self, t: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.diag(t))
    }

    pub fn g_inv(&self, t: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.diag(t).map(|d| 1.0 / d))
    }

    pub fn apply(&self, t: f64, x: &AmbientVector) -> AmbientVector {
        x.component_mul(&self.diag(t))
    }

    /// The companion family (point ↔ hyperplane).
    pub fn dual(&self) -> Self {
        Self::new(self.kind.other(), self.dim)
    }

    /// Relative distance of `x` from the fixed locus.
    pub fn locus_residual(&self, x: &AmbientVector) -> f64 {
        let n = self.dim - 1;
        let s = x.norm().max(f64::MIN_POSITIVE);
        match self.kind {
            FamilyKind::BlowUpPoint => x.rows(0, n).amax() / s,
            FamilyKind::BlowUpHyperplane => x[n].abs() / s,
        }
    }
}

pub type VecFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// A differentiable path of representatives.
#[derive(Clone)]
pub struct PointPath {
    pub eval: VecFn,
    /// Optional analytic value of `ẋ(0)`.
    pub derivative: Option<DVector<f64>>,
}

impl PointPath {
    pub fn new(f: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), derivative: None }
    }

    pub fn with_derivative(mut self, d: DVector<f64>) -> Self {
        self.derivative = Some(d);
        self
    }

    pub fn at(&self, t: f64) -> DVector<f64> {
        (self.eval)(t)
    }

    /// Orbit `exp(tA) x0`.
    pub fn orbit(a: DMatrix<f64>, x0: AmbientVector) -> Self {
        let d = &a * &x0;
        Self::new(move |t| (&a * t).exp() * &x0).with_derivative(d)
    }

    fn velocity(&self) -> Result<DVector<f64>> {
        if let Some(d) = &self.derivative {
            return Ok(d.clone());
        }
        let l = numeric::derivative_at(|t| self.at(t), 0.0);
        Ok(l.value)
    }
}

impl fmt::Debug for PointPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointPath").field("x0", &self.at(0.0).as_slice()).finish()
    }
}

/// A path of matrices in a source isometry group.
#[derive(Clone)]
pub struct IsometryPath {
    pub eval: MatFn,
}

impl IsometryPath {
    pub fn new(f: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f) }
    }

    /// `exp(tA) h0`.
    pub fn orbit(a: DMatrix<f64>, h0: DMatrix<f64>) -> Self {
        Self::new(move |t| (&a * t).exp() * &h0)
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        (self.eval)(t)
    }

    /// Whether every sampled `h(t)` preserves `b` to `tol`.
    pub fn preserves(&self, b: &BilinearForm, tol: f64) -> bool {
        numeric::schedule().into_iter().chain([0.0, 1.0]).all(|t| b.preserved_by(&self.at(t), tol))
    }
}

impl fmt::Debug for IsometryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IsometryPath").finish_non_exhaustive()
    }
}

/// `lim g_t x(t)`: zeroth-order coordinates on the fixed locus, first
/// derivatives transversally.
pub fn rescaled_point_limit(path: &PointPath, fam: &RescalingFamily) -> Result<ProjPoint> {
    let x0 = path.at(0.0);
    crate::error::check_dim(fam.dim, x0.len())?;
    let r = fam.locus_residual(&x0);
    if r > BASE_TOL {
        return Err(GeomError::BaseCondition(r));
    }
    let v = path.velocity()?;
    let n = fam.dim - 1;
    let mut out = x0.clone();
    match fam.kind {
        FamilyKind::BlowUpPoint => out.rows_mut(0, n).copy_from(&v.rows(0, n)),
        FamilyKind::BlowUpHyperplane => out[n] = v[n],
    }
    ProjPoint::new(out)
}

/// `g_t h g_t⁻¹`, entrywise `g_i h_ij / g_j`.
pub fn conjugate_isometry(h: &DMatrix<f64>, fam: &RescalingFamily, t: f64) -> DMatrix<f64> {
    let g = fam.diag(t);
    DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| g[i] * h[(i, j)] / g[j])
}

/// Extrapolated `lim_{t→0} g_t h(t) g_t⁻¹`.
pub fn conjugate_path_limit(path: &IsometryPath, fam: &RescalingFamily) -> (DMatrix<f64>, Limit) {
    let d = fam.dim;
    let l = numeric::limit_at_zero(|t| {
        let c = conjugate_isometry(&path.at(t), fam, t);
        DVector::from_column_slice(c.as_slice())
    });
    (DMatrix::from_column_slice(d, d, l.value.as_slice()), l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetGroup {
    IsomEuc,
    IsomMin,
    IsomCoEuc,
    IsomCoMin,
}

impl TargetGroup {
    pub fn space(self) -> SpaceName {
        match self {
            TargetGroup::IsomEuc => SpaceName::Euc,
            TargetGroup::IsomMin => SpaceName::Min,
            TargetGroup::IsomCoEuc => SpaceName::CoEuc,
            TargetGroup::IsomCoMin => SpaceName::CoMin,
        }
    }

    /// Form preserved by the linear block A.
    fn block_form(self, n: usize) -> BilinearForm {
        match self {
            TargetGroup::IsomEuc | TargetGroup::IsomCoEuc => BilinearForm::standard(n, 0),
            TargetGroup::IsomMin | TargetGroup::IsomCoMin => BilinearForm::standard(n - 1, 1),
        }
    }
}

/// Block-pattern test at [`GROUP_TOL`].
pub fn limit_group_membership(m: &DMatrix<f64>, target: TargetGroup) -> bool {
    limit_group_membership_tol(m, target, GROUP_TOL)
}

/// `[A b; 0 ±1]` for Euc/Min, `[A 0; tᵀ ±1]` for the co-spaces, with `A` in
/// O(n) or O(n-1,1). The representative is normalized by `|m_{n+1,n+1}|`.
pub fn limit_group_membership_tol(m: &DMatrix<f64>, target: TargetGroup, tol: f64) -> bool {
    let d = m.nrows();
    if d < 2 || m.ncols() != d || m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let n = d - 1;
    let c = m[(n, n)].abs();
    if c < 1e-12 {
        return false;
    }
    let m = m / c;
    let zero_block = match target {
        TargetGroup::IsomEuc | TargetGroup::IsomMin => m.view((n, 0), (1, n)).amax(),
        TargetGroup::IsomCoEuc | TargetGroup::IsomCoMin => m.view((0, n), (n, 1)).amax(),
    };
    if zero_block > tol {
        return false;
    }
    let a = m.view((0, 0), (n, n)).into_owned();
    target.block_form(n).preserved_by(&a, tol)
}

/// A built-in transition in adapted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub source: SpaceName,
    pub space: ModelSpace,
    pub family: RescalingFamily,
    pub target: TargetGroup,
}

impl Transition {
    /// Source space `name` of dimension n with a form adapted to `kind`:
    /// the fixed point is `e_{n+1}`, the fixed hyperplane `x_{n+1} = 0`.
    ///
    /// | source | point | hyperplane |
    /// |---|---|---|
    /// | Ell | b_{n+1,0} → Euc | b_{n+1,0} → coEuc |
    /// | Hyp | b_{n,1} → Euc | diag(1,…,-1,1) → coMin |
    /// | dS  | diag(1,…,-1,1) → Min | b_{n,1} → coEuc |
    /// | AdS | b_{n-1,2} → Min | b_{n-1,2} → coMin |
    pub fn adapted(name: SpaceName, kind: FamilyKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(GeomError::Precondition("transitions need n >= 2".into()));
        }
        let lorentz_swap = || {
            let mut d = vec![1.0; n + 1];
            d[n - 1] = -1.0;
            BilinearForm::diagonal(&d)
        };
        use FamilyKind::*;
        let (form, target) = match (name, kind) {
            (SpaceName::Ell, BlowUpPoint) => (BilinearForm::standard(n + 1, 0), TargetGroup::IsomEuc),
            (SpaceName::Ell, BlowUpHyperplane) => (BilinearForm::standard(n + 1, 0), TargetGroup::IsomCoEuc),
            (SpaceName::Hyp, BlowUpPoint) => (BilinearForm::standard(n, 1), TargetGroup::IsomEuc),
            (SpaceName::Hyp, BlowUpHyperplane) => (lorentz_swap(), TargetGroup::IsomCoMin),
            (SpaceName::DS, BlowUpPoint) => (lorentz_swap(), TargetGroup::IsomMin),
            (SpaceName::DS, BlowUpHyperplane) => (BilinearForm::standard(n, 1), TargetGroup::IsomCoEuc),
            (SpaceName::AdS, BlowUpPoint) => (BilinearForm::standard(n - 1, 2), TargetGroup::IsomMin),
            (SpaceName::AdS, BlowUpHyperplane) => (BilinearForm::standard(n - 1, 2), TargetGroup::IsomCoMin),
            (other, _) => {
                return Err(GeomError::Precondition(format!("{} is not a non-degenerate source space", other.label())))
            }
        };
        let sign = ModelSpace::named(name, n).sign;
        let mut space = ModelSpace::custom(form, sign);
        space.name = Some(name);
        Ok(Self { source: name, space, family: RescalingFamily::new(kind, n + 1), target })
    }

    pub fn form(&self) -> &BilinearForm {
        &self.space.form
    }

    /// The partner transition of the duality diagrams: same form, other family,
    /// dual source (Ell ↔ Ell, Hyp ↔ dS, AdS ↔ AdS).
    pub fn dual(&self) -> Result<Self> {
        let partner = match self.source {
            SpaceName::Hyp => SpaceName::DS,
            SpaceName::DS => SpaceName::Hyp,
            s => s,
        };
        let d = Self::adapted(partner, self.family.kind.other(), self.space.n())?;
        debug_assert_eq!(d.form(), self.form());
        Ok(d)
    }

    /// Block form of the fixed locus' stabilizer: the upper n×n part of J.
    fn block(&self) -> BilinearForm {
        let n = self.space.n();
        BilinearForm::new(self.form().matrix().view((0, 0), (n, n)).into_owned()).expect("diagonal block")
    }

    /// Random `h0 = diag(A0, ±1)` stabilizing the fixed locus.
    pub fn random_stabilizer<R: Rng>(&self, rng: &mut R, scale: f64) -> DMatrix<f64> {
        let n = self.space.n();
        let mut a0 = self.block().random_isometry(rng, scale);
        if rng.gen_bool(0.5) {
            a0.row_mut(0).neg_mut();
        }
        let mut h0 = DMatrix::zeros(n + 1, n + 1);
        h0.view_mut((0, 0), (n, n)).copy_from(&a0);
        h0[(n, n)] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        h0
    }

    /// A random isometry path `exp(tA) h0` and its expected conjugacy limit
    /// computed from `ḣ(0) = A h0`.
    pub fn random_isometry_path<R: Rng>(&self, rng: &mut R, scale: f64) -> (IsometryPath, DMatrix<f64>) {
        let n = self.space.n();
        let a = self.form().random_generator(rng, scale);
        let h0 = self.random_stabilizer(rng, scale);
        let dh = &a * &h0;
        let mut expect = h0.clone();
        match self.family.kind {
            FamilyKind::BlowUpPoint => expect.view_mut((0, n), (n, 1)).copy_from(&dh.view((0, n), (n, 1))),
            FamilyKind::BlowUpHyperplane => expect.view_mut((n, 0), (1, n)).copy_from(&dh.view((n, 0), (1, n))),
        }
        (IsometryPath::orbit(a, h0), expect)
    }

    /// Random point on the fixed locus inside the source space.
    pub fn random_base_point<R: Rng>(&self, rng: &mut R) -> AmbientVector {
        let n = self.space.n();
        match self.family.kind {
            FamilyKind::BlowUpPoint => {
                let mut e = DVector::zeros(n + 1);
                e[n] = 1.0;
                e
            }
            FamilyKind::BlowUpHyperplane => loop {
                let mut x = DVector::from_fn(n + 1, |_, _| rng.gen_range(-1.0..1.0));
                x[n] = 0.0;
                let q = self.space.sign * self.form().q(&x);
                if q > 0.1 * x.norm_squared() {
                    break x / q.sqrt();
                }
            },
        }
    }

    /// A random orbit path `exp(tA) x0` of the source with `x0` on the locus.
    pub fn random_point_path<R: Rng>(&self, rng: &mut R, scale: f64) -> PointPath {
        let x0 = self.random_base_point(rng);
        let a = self.form().random_generator(rng, scale);
        PointPath::orbit(a, x0)
    }
}

/// Generalized cross product of `dim-1` vectors in ℝ^{dim}: `n_i = det(e_i, v_1, …)`.
pub fn generalized_cross(vs: &[DVector<f64>]) -> DVector<f64> {
    let d = vs.len() + 1;
    let m = DMatrix::from_fn(d, d - 1, |i, j| vs[j][i]);
    DVector::from_fn(d, |i, _| {
        let minor = m.clone().remove_row(i);
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        s * minor.determinant()
    })
}

fn proj_gap(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return f64::INFINITY;
    }
    let (ua, ub) = (a / na, b / nb);
    (&ua - &ub).amax().min((&ua + &ub).amax())
}

/// Gap between `J·lim g_t x(t)` (the dual of the rescaled limit) and the
/// rescaled limit under `fam*` of the dual hyperplanes `x(t)^⊥`.
///
/// The second side never uses the first: the dual hyperplane is spanned by a
/// smooth basis, pushed by `g*_t`, and its normal recovered by a generalized
/// cross product before extrapolating.
pub fn duality_transition_gap(
    x_path: &PointPath,
    form: &BilinearForm,
    fam: &RescalingFamily,
    fam_star: &RescalingFamily,
) -> Result<f64> {
    if fam.kind != FamilyKind::BlowUpPoint || fam_star.kind != FamilyKind::BlowUpHyperplane || fam.dim != fam_star.dim {
        return Err(GeomError::Precondition("expected a point family and its hyperplane partner".into()));
    }
    let x_inf = rescaled_point_limit(x_path, fam)?;
    let side1 = form.lower(x_inf.rep());

    let d = fam.dim;
    let n = d - 1;
    let nu0 = form.lower(&x_path.at(0.0));
    let r = fam.locus_residual(&nu0);
    if r > BASE_TOL {
        return Err(GeomError::BaseCondition(r));
    }
    let normal_at = |t: f64| {
        let nu = form.lower(&x_path.at(t));
        let basis: Vec<DVector<f64>> = (0..n)
            .map(|i| {
                let mut u = DVector::zeros(d);
                u[i] = 1.0;
                u[n] = -nu[i] / nu[n];
                fam_star.apply(t, &u)
            })
            .collect();
        let c = generalized_cross(&basis);
        let s = c[n].abs().max(f64::MIN_POSITIVE);
        c / s
    };
    let l = numeric::limit_at_zero(normal_at);
    Ok(proj_gap(&side1, &l.value))
}

/// [`duality_transition_gap`] below [`DUALITY_TOL`].
pub fn duality_transition_check(
    x_path: &PointPath,
    form: &BilinearForm,
    fam: &RescalingFamily,
    fam_star: &RescalingFamily,
) -> Result<bool> {
    Ok(duality_transition_gap(x_path, form, fam, fam_star)? < DUALITY_TOL)
}

/// 1-d toy model.
pub mod toy {
    use super::*;

    pub fn rotation(theta: f64) -> Matrix2<f64> {
        let (s, c) = theta.sin_cos();
        Matrix2::new(c, -s, s, c)
    }

    /// Boost fixing the ideal points `[1 : ±1]`.
    pub fn boost(phi: f64) -> Matrix2<f64> {
        Matrix2::new(phi.cosh(), phi.sinh(), phi.sinh(), phi.cosh())
    }

    pub fn translation(a: f64) -> Matrix2<f64> {
        Matrix2::new(1.0, a, 0.0, 1.0)
    }

    pub fn rescaling(k: f64) -> Matrix2<f64> {
        Matrix2::new(k, 0.0, 0.0, 1.0)
    }

    #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
    pub enum LineKind {
        Elliptic,
        Hyperbolic,
    }

    /// `g_k M_{a/k} g_k⁻¹` with `M = R` or `S`.
    pub fn conjugate(kind: LineKind, a: f64, k: f64) -> Matrix2<f64> {
        let m = match kind {
            LineKind::Elliptic => rotation(a / k),
            LineKind::Hyperbolic => boost(a / k),
        };
        rescaling(k) * m * rescaling(1.0 / k)
    }

    /// Extrapolated limit as k → ∞ (t = 1/k → 0). The upper-right entry is
    /// `-k sin(a/k)` or `k sinh(a/k)`, so the limit is `T_{-a}` for rotations
    /// and `T_a` for boosts.
    pub fn limit(kind: LineKind, a: f64) -> (Matrix2<f64>, Limit) {
        let l = numeric::limit_at_zero(|t| {
            let c = conjugate(kind, a, 1.0 / t);
            DVector::from_column_slice(c.as_slice())
        });
        (Matrix2::from_column_slice(l.value.as_slice()), l)
    }
}
