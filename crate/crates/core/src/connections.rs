//! Connections and volume forms on pseudo-spheres and co-spaces.
//!
//! Everything lives on the double cover: points are representatives `x` with
//! `b(x,x) = ε`, tangent vectors are ambient vectors with `b(x,u) = 0`. The
//! transverse field is `N_x = x` and the connection is the tangential part of
//! the ambient derivative, `∇_v w = Dw(v) + ε b(v,w) x`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, GeomError, Result};
use crate::forms::{AmbientVector, BilinearForm};
use crate::numeric;
use crate::projective::{ModelSpace, SpaceName};
use crate::transition::{FamilyKind, Transition};

/// Tangency defect above which a warning is logged.
pub const TANGENCY_WARN: f64 = 1e-8;

pub type FieldFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type JacFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A vector field given on a neighbourhood of the locus in ℝ^{n+1}.
#[derive(Clone)]
pub struct VectorField {
    eval: FieldFn,
    jacobian: Option<JacFn>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField").field("analytic_jacobian", &self.jacobian.is_some()).finish()
    }
}

impl VectorField {
    pub fn new(f: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), jacobian: None }
    }

    pub fn with_jacobian(mut self, j: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn constant(v: DVector<f64>) -> Self {
        let d = v.len();
        Self::new(move |_| v.clone()).with_jacobian(move |_| DMatrix::zeros(d, d))
    }

    pub fn linear(m: DMatrix<f64>) -> Self {
        let m2 = m.clone();
        Self::new(move |x| &m * x).with_jacobian(move |_| m2.clone())
    }

    /// `N_x = x`.
    pub fn position(dim: usize) -> Self {
        Self::linear(DMatrix::identity(dim, dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(DVector::zeros(dim))
    }

    pub fn at(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.eval)(x)
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// Extension of the tangential part: `W(y) - b(y,W(y)) / b(y,y) · y`.
    pub fn tangent_to(&self, space: &ModelSpace) -> Self {
        let w = self.clone();
        let b = space.form.clone();
        let f = Self::new({
            let (w, b) = (w.clone(), b.clone());
            move |y| {
                let v = w.at(y);
                let q = b.q(y);
                if q == 0.0 {
                    return v;
                }
                let c = b.b(y, &v) / q;
                v - y * c
            }
        });
        let Some(jw) = w.jacobian.clone() else {
            return f;
        };
        // d(c y) = y ⊗ ∇c + c I with c = b(y,W)/b(y,y)
        f.with_jacobian(move |y| {
            let v = w.at(y);
            let dw = jw(y);
            let q = b.q(y);
            let d = y.len();
            if q == 0.0 {
                return dw;
            }
            let jy = b.lower(y);
            let bw = jy.dot(&v);
            let grad = (b.lower(&v) + dw.transpose() * &jy) / q - &jy * (2.0 * bw / (q * q));
            dw - y * grad.transpose() - DMatrix::identity(d, d) * (bw / q)
        })
    }
}

/// A quadratic polynomial map `c + A y + (yᵀ Q_k y)_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyField {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub q: Vec<Vec<Vec<f64>>>,
}

impl PolyField {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        check_dim(d, self.a.len())?;
        for r in &self.a {
            check_dim(d, r.len())?;
        }
        if !self.q.is_empty() {
            check_dim(d, self.q.len())?;
            for m in &self.q {
                check_dim(d, m.len())?;
                for r in m {
                    check_dim(d, r.len())?;
                }
            }
        }
        Ok(())
    }

    pub fn random<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Self {
        let mut u = || rng.gen_range(-scale..scale);
        let c = (0..dim).map(|_| u()).collect();
        let a = (0..dim).map(|_| (0..dim).map(|_| u()).collect()).collect();
        let q = (0..dim).map(|_| (0..dim).map(|_| (0..dim).map(|_| u()).collect()).collect()).collect();
        Self { c, a, q }
    }

    fn parts(&self) -> (DVector<f64>, DMatrix<f64>, Vec<DMatrix<f64>>) {
        let d = self.dim();
        let c = DVector::from_vec(self.c.clone());
        let a = DMatrix::from_fn(d, d, |i, j| self.a[i][j]);
        let q = self
            .q
            .iter()
            .map(|m| {
                let m = DMatrix::from_fn(d, d, |i, j| m[i][j]);
                (&m + m.transpose()) * 0.5
            })
            .collect();
        (c, a, q)
    }

    pub fn field(&self) -> VectorField {
        let (c, a, q) = self.parts();
        let (a2, q2) = (a.clone(), q.clone());
        let d = self.dim();
        VectorField::new(move |y| {
            let mut v = &c + &a * y;
            for (k, m) in q.iter().enumerate() {
                v[k] += y.dot(&(m * y));
            }
            v
        })
        .with_jacobian(move |y| {
            let mut j = a2.clone();
            for (k, m) in q2.iter().enumerate() {
                let g = m * y * 2.0;
                for i in 0..d {
                    j[(k, i)] += g[i];
                }
            }
            j
        })
    }
}

/// `DW(v)` at `x`: analytic Jacobian if present, otherwise central differences
/// with step `1e-5 (1+|x|)`.
pub fn ambient_derivative(w: &VectorField, v: &AmbientVector, x: &AmbientVector) -> Result<AmbientVector> {
    let d = match &w.jacobian {
        Some(j) => j(x) * v,
        None => numeric::directional(|y| w.at(y), x, v),
    };
    if d.iter().any(|c| !c.is_finite()) {
        return Err(GeomError::Precondition("vector field evaluation is not finite".into()));
    }
    Ok(d)
}

/// Lie bracket `[X,Y] = DY(X) - DX(Y)`.
pub fn bracket(xf: &VectorField, yf: &VectorField, p: &AmbientVector) -> Result<AmbientVector> {
    Ok(ambient_derivative(yf, &xf.at(p), p)? - ambient_derivative(xf, &yf.at(p), p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectionKind {
    LeviCivita,
    Degenerate,
}

/// Connection of a model space (double cover) built from `N_x = x`.
#[derive(Debug, Clone)]
pub struct Connection {
    pub space: ModelSpace,
    pub kind: ConnectionKind,
}

/// Levi-Civita connection of a non-degenerate pseudo-sphere.
pub fn levi_civita(space: &ModelSpace) -> Result<Connection> {
    if space.is_degenerate() {
        return Err(GeomError::Precondition(format!("{} is degenerate, use co_connection", space)));
    }
    Ok(Connection { space: space.clone(), kind: ConnectionKind::LeviCivita })
}

/// Connection of co-Euclidean or co-Minkowski space.
pub fn co_connection(space: &ModelSpace) -> Result<Connection> {
    let sig = space.form.signature();
    if sig.z != 1 {
        return Err(GeomError::Precondition(format!("{} is not a co-space", space)));
    }
    Ok(Connection { space: space.clone(), kind: ConnectionKind::Degenerate })
}

impl Connection {
    /// Connection matching the degeneracy of `space`.
    pub fn for_space(space: &ModelSpace) -> Result<Self> {
        if space.is_degenerate() {
            co_connection(space)
        } else {
            levi_civita(space)
        }
    }

    pub fn form(&self) -> &BilinearForm {
        &self.space.form
    }

    pub fn dim(&self) -> usize {
        self.space.form.dim()
    }

    pub fn eps(&self) -> f64 {
        self.space.sign
    }

    /// Tangential part `u - ε b(x,u) x`.
    pub fn project(&self, x: &AmbientVector, u: &AmbientVector) -> AmbientVector {
        u - x * (self.eps() * self.form().b(x, u))
    }

    /// `|b(x,u)|` relative to `|u|`.
    pub fn tangency_defect(&self, x: &AmbientVector, u: &AmbientVector) -> f64 {
        self.form().b(x, u).abs() / u.norm().max(1.0)
    }

    /// `∇_v W` at `x`.
    pub fn covariant(&self, v: &AmbientVector, w: &VectorField, x: &AmbientVector) -> Result<AmbientVector> {
        check_dim(self.dim(), x.len())?;
        let wx = w.at(x);
        let defect = self.tangency_defect(x, &wx).max(self.tangency_defect(x, v));
        if defect > TANGENCY_WARN {
            log::warn!("field not tangent to {} (defect {:e}); projecting", self.space, defect);
        }
        Ok(self.project(x, &ambient_derivative(w, v, x)?))
    }

    /// `∇_V W` at `x`.
    pub fn eval(&self, v: &VectorField, w: &VectorField, x: &AmbientVector) -> Result<AmbientVector> {
        self.covariant(&v.at(x), w, x)
    }

    /// Covariant acceleration of a curve at `t`.
    pub fn acceleration<F>(&self, curve: &F, t: f64) -> AmbientVector
    where
        F: Fn(f64) -> DVector<f64>,
    {
        let h = 1e-3;
        self.project(&curve(t), &numeric::curve_d2(curve, t, h))
    }

    /// Parallel transport of `v0` along `curve` on `[t0, t1]`, RK4 on
    /// `V' = -ε b(γ', V) γ`.
    pub fn transport<F>(&self, curve: &F, v0: &AmbientVector, t0: f64, t1: f64, steps: usize) -> AmbientVector
    where
        F: Fn(f64) -> DVector<f64>,
    {
        let eps = self.eps();
        let b = self.form();
        let h = (t1 - t0) / steps as f64;
        let rhs = |t: f64, v: &DVector<f64>| {
            let g = curve(t);
            let dg = numeric::curve_d1(curve, t, 1e-3);
            g * (-eps * b.b(&dg, v))
        };
        let mut v = v0.clone();
        for k in 0..steps {
            let t = t0 + k as f64 * h;
            let k1 = rhs(t, &v);
            let k2 = rhs(t + h / 2.0, &(&v + &k1 * (h / 2.0)));
            let k3 = rhs(t + h / 2.0, &(&v + &k2 * (h / 2.0)));
            let k4 = rhs(t + h, &(&v + &k3 * h));
            v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        v
    }
}

/// The degenerate field `T`: the kernel direction of the co-space form, with
/// last coordinate positive.
pub fn degenerate_field(space: &ModelSpace) -> Result<VectorField> {
    let d = space.form.dim();
    let e = space.form.matrix().clone().symmetric_eigen();
    let (k, lam) =
        e.eigenvalues.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).ok_or(GeomError::Empty)?;
    if !space.is_degenerate() {
        return Err(GeomError::Precondition(format!("{} has no degenerate direction (|λ| = {:e})", space, lam)));
    }
    let mut t = e.eigenvectors.column(k).into_owned();
    let last = (0..d).rev().find(|&i| t[i].abs() > 1e-12).unwrap_or(0);
    if t[last] < 0.0 {
        t.neg_mut();
    }
    Ok(VectorField::constant(t))
}

/// `ω(v, w, u) = det(N_x, v, w, u)`.
#[derive(Debug, Clone)]
pub struct VolumeForm {
    pub space: ModelSpace,
}

pub fn volume_form(space: &ModelSpace) -> VolumeForm {
    VolumeForm { space: space.clone() }
}

impl VolumeForm {
    pub fn eval(&self, x: &AmbientVector, vs: &[AmbientVector]) -> Result<f64> {
        let d = self.space.form.dim();
        check_dim(d, x.len())?;
        check_dim(d - 1, vs.len())?;
        let m = DMatrix::from_fn(d, d, |i, j| if j == 0 { x[i] } else { vs[j - 1][i] });
        Ok(m.determinant())
    }
}

/// `|Z.ω(X₁,…) - Σ ω(…,∇_Z X_i,…)|` at `x`.
pub fn parallel_volume_residual(
    conn: &Connection,
    om: &VolumeForm,
    z: &VectorField,
    fields: &[VectorField],
    x: &AmbientVector,
) -> Result<f64> {
    let zx = z.at(x);
    let lhs = numeric::directional_scalar(
        |y| {
            let vs: Vec<_> = fields.iter().map(|f| f.at(y)).collect();
            om.eval(y, &vs).unwrap_or(f64::NAN)
        },
        x,
        &zx,
    );
    let vals: Vec<_> = fields.iter().map(|f| f.at(x)).collect();
    let mut rhs = 0.0;
    for i in 0..fields.len() {
        let mut vs = vals.clone();
        vs[i] = conn.covariant(&zx, &fields[i], x)?;
        rhs += om.eval(x, &vs)?;
    }
    Ok((lhs - rhs).abs())
}

/// `|∇_X Y - ∇_Y X - [X,Y]|`.
pub fn symmetry_residual(conn: &Connection, xf: &VectorField, yf: &VectorField, p: &AmbientVector) -> Result<f64> {
    let r = conn.eval(xf, yf, p)? - conn.eval(yf, xf, p)? - bracket(xf, yf, p)?;
    Ok(r.amax())
}

/// `|Z.b(X,Y) - b(∇_Z X, Y) - b(X, ∇_Z Y)|`.
pub fn compatibility_residual(
    conn: &Connection,
    xf: &VectorField,
    yf: &VectorField,
    zf: &VectorField,
    p: &AmbientVector,
) -> Result<f64> {
    let b = conn.form();
    let zp = zf.at(p);
    let lhs = numeric::directional_scalar(|y| b.b(&xf.at(y), &yf.at(y)), p, &zp);
    let rhs = b.b(&conn.covariant(&zp, xf, p)?, &yf.at(p)) + b.b(&xf.at(p), &conn.covariant(&zp, yf, p)?);
    Ok((lhs - rhs).abs())
}

/// Sup of `|∇_γ' γ'|` over `samples` points of `[t0, t1]`.
pub fn geodesic_residual<F>(conn: &Connection, curve: &F, t0: f64, t1: f64, samples: usize) -> f64
where
    F: Fn(f64) -> DVector<f64>,
{
    (0..samples)
        .map(|k| t0 + (t1 - t0) * k as f64 / (samples.max(2) - 1) as f64)
        .map(|t| conn.acceleration(curve, t).amax())
        .fold(0.0, f64::max)
}

/// Unit-speed line through `x` with tangent direction `u`: trigonometric,
/// hyperbolic or affine according to `b(u,u)`.
pub fn line_curve(space: &ModelSpace, x: &AmbientVector, u: &AmbientVector) -> impl Fn(f64) -> DVector<f64> {
    let eps = space.sign;
    let c = space.form.q(u);
    let (x, u) = (x.clone(), u.clone());
    let kind = if c.abs() < 1e-12 * u.norm_squared() {
        0
    } else if c.signum() == eps {
        1
    } else {
        2
    };
    let s = if kind == 0 { 1.0 } else { c.abs().sqrt() };
    let u = u / s;
    move |t: f64| match kind {
        0 => &x + &u * t,
        1 => &x * t.cos() + &u * t.sin(),
        _ => &x * t.cosh() + &u * t.sinh(),
    }
}

/// Random point of the locus `b(x,x) = ε`.
pub fn random_locus_point<R: Rng>(rng: &mut R, space: &ModelSpace) -> AmbientVector {
    let d = space.form.dim();
    loop {
        let x = DVector::from_fn(d, |_, _| rng.gen_range(-1.5..1.5));
        let q = space.sign * space.form.q(&x);
        if q > 0.2 * x.norm_squared() {
            return x / q.sqrt();
        }
    }
}

/// Random tangent vector at `x`.
pub fn random_tangent<R: Rng>(rng: &mut R, conn: &Connection, x: &AmbientVector) -> AmbientVector {
    let u = DVector::from_fn(x.len(), |_, _| rng.gen_range(-1.0..1.0));
    conn.project(x, &u)
}

/// Residual table of a connection on sample fields and points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConnectionReport {
    pub symmetry: f64,
    pub compatibility: f64,
    pub parallel_t: Option<f64>,
    pub parallel_volume: f64,
    pub plane: Option<f64>,
    pub geodesic: f64,
}

/// Residuals over every ordered triple of `fields` at every point. Fields are
/// projected to the tangent bundle first.
pub fn connection_report(
    conn: &Connection,
    fields: &[VectorField],
    points: &[AmbientVector],
) -> Result<ConnectionReport> {
    if fields.len() < 3 {
        return Err(GeomError::Precondition("need at least three fields".into()));
    }
    let fs: Vec<_> = fields.iter().map(|f| f.tangent_to(&conn.space)).collect();
    let om = volume_form(&conn.space);
    let t = if conn.kind == ConnectionKind::Degenerate { Some(degenerate_field(&conn.space)?) } else { None };
    let mut r = ConnectionReport { parallel_t: t.as_ref().map(|_| 0.0), ..Default::default() };
    let m = fs.len();
    for p in points {
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                r.symmetry = r.symmetry.max(symmetry_residual(conn, &fs[i], &fs[j], p)?);
                let k = (0..m).find(|&k| k != i && k != j).unwrap_or(i);
                r.compatibility = r.compatibility.max(compatibility_residual(conn, &fs[i], &fs[j], &fs[k], p)?);
            }
            if let (Some(t), Some(v)) = (&t, r.parallel_t.as_mut()) {
                *v = v.max(conn.eval(&fs[i], t, p)?.amax());
            }
            let rest: Vec<_> = (0..m).filter(|&k| k != i).take(conn.dim() - 1).map(|k| fs[k].clone()).collect();
            if rest.len() == conn.dim() - 1 {
                r.parallel_volume = r.parallel_volume.max(parallel_volume_residual(conn, &om, &fs[i], &rest, p)?);
            }
            let u = conn.project(p, &fs[i].at(p));
            if u.norm() > 1e-9 {
                r.geodesic = r.geodesic.max(geodesic_residual(conn, &line_curve(&conn.space, p, &u), -0.5, 0.5, 11));
            }
        }
        if conn.kind == ConnectionKind::Degenerate {
            let v = plane_preservation_residual(conn, p, &fs[0], &fs[1])?;
            r.plane = Some(r.plane.unwrap_or(0.0).max(v));
        }
    }
    Ok(r)
}

/// For the space-like plane `{x_{n+1} = c·x'}` through `p` (with `c` chosen
/// so that the plane passes through `p`), restrict the fields to it and
/// measure the normal component of `∇_V W`.
pub fn plane_preservation_residual(
    conn: &Connection,
    p: &AmbientVector,
    v: &VectorField,
    w: &VectorField,
) -> Result<f64> {
    let d = conn.dim();
    let n = d - 1;
    let eps = conn.eps();
    let xp = p.rows(0, n).into_owned();
    let q = conn.form().matrix().view((0, 0), (n, n)).into_owned();
    // normal ν = (-c, 1) with c = ε p_{n+1} Q p' so that ν·p = 0
    let c = &q * &xp * (eps * p[n]);
    let mut nu = DVector::zeros(d);
    nu.rows_mut(0, n).copy_from(&(-&c));
    nu[n] = 1.0;
    let restrict = |f: &VectorField| {
        let f = f.clone();
        let nu = nu.clone();
        VectorField::new(move |y| {
            let u = f.at(y);
            // keep b*-tangency: move along T only
            let mut out = u.clone();
            out[n] -= nu.dot(&u);
            out
        })
    };
    let (vr, wr) = (restrict(v), restrict(w));
    let r = conn.eval(&vr, &wr, p)?;
    Ok(nu.dot(&r).abs())
}

/// A smooth family `t ↦ X_t` of source fields, with an optional analytic
/// limit field `lim g*_t X_t`.
#[derive(Clone)]
pub struct FieldFamily {
    pub at: Arc<dyn Fn(f64) -> VectorField + Send + Sync>,
    pub limit: Option<VectorField>,
}

impl fmt::Debug for FieldFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldFamily").field("analytic_limit", &self.limit.is_some()).finish()
    }
}

fn rescaled_projector(form: &BilinearForm, t: f64) -> DMatrix<f64> {
    let n = form.dim() - 1;
    let mut m = form.matrix().clone();
    m[(n, n)] *= t * t;
    m
}

impl FieldFamily {
    /// `X_t(x) = g_t⁻¹ Π_t(g_t x, Z(g_t x))`, with `Π_t` the tangential
    /// projection of `S_t = g_t(source)` for `b^t = diag(J', t² J_{n+1})`.
    /// Its limit is the co-space projection of `Z`.
    pub fn rescaled(tr: &Transition, z: VectorField) -> Result<Self> {
        if tr.family.kind != FamilyKind::BlowUpHyperplane {
            return Err(GeomError::Precondition("connection transition needs a hyperplane blow-up".into()));
        }
        let form = tr.form().clone();
        let fam = tr.family;
        let co = co_space(tr);
        let zc = z.clone();
        let at = move |t: f64| {
            let bt = rescaled_projector(&form, t);
            let z = zc.clone();
            VectorField::new(move |x| {
                let y = fam.apply(t, x);
                let v = z.at(&y);
                let c = (y.transpose() * &bt * &v)[0] / (y.transpose() * &bt * &y)[0];
                let u = v - &y * c;
                u.component_mul(&fam.diag(t).map(|g| 1.0 / g))
            })
        };
        Ok(Self { at: Arc::new(at), limit: Some(z.tangent_to(&co)) })
    }

    pub fn field(&self, t: f64) -> VectorField {
        (self.at)(t)
    }
}

/// The co-space limit of a hyperplane transition.
pub fn co_space(tr: &Transition) -> ModelSpace {
    match tr.target.space() {
        SpaceName::CoEuc => ModelSpace::named(SpaceName::CoEuc, tr.space.n()),
        _ => ModelSpace::named(SpaceName::CoMin, tr.space.n()),
    }
}

/// Source point `x_t = g_t⁻¹ y_t` with `y_t ∈ S_t`, `y_t → x_inf`.
pub fn source_point(tr: &Transition, x_inf: &AmbientVector, t: f64) -> Result<AmbientVector> {
    let n = tr.space.n();
    let eps = tr.space.sign;
    let j = tr.form().matrix()[(n, n)];
    let s2 = 1.0 - j * t * t * x_inf[n] * x_inf[n] / eps;
    if s2 <= 0.0 {
        return Err(GeomError::Precondition("t too large for the base point".into()));
    }
    let s = s2.sqrt();
    let mut x = x_inf * s;
    x[n] = t * x_inf[n];
    Ok(x)
}

fn limit_field_at(tr: &Transition, fam: &FieldFamily, x_inf: &AmbientVector) -> Result<AmbientVector> {
    if let Some(l) = &fam.limit {
        return Ok(l.at(x_inf));
    }
    let l = numeric::limit_at_zero(|t| {
        let x = source_point(tr, x_inf, t).unwrap_or_else(|_| x_inf.map(|_| f64::NAN));
        tr.family.apply(t, &fam.field(t).at(&x))
    });
    if !l.converged && l.error > 1e-6 {
        return Err(GeomError::Precondition(format!("g_t X_t diverges (tangency violated), gap {:e}", l.error)));
    }
    Ok(l.value)
}

fn check_co_point(co: &ModelSpace, x_inf: &AmbientVector) -> Result<()> {
    check_dim(co.form.dim(), x_inf.len())?;
    if (co.form.q(x_inf) - co.sign).abs() > 1e-9 {
        return Err(GeomError::NotInSpace { space: co.to_string(), detail: "base point off the locus".into() });
    }
    Ok(())
}

/// Extrapolated `|lim g_t ∇^{src}_{X_t} Y_t − ∇^{co}_{Ẋ} Ẏ|` at `x_inf`.
pub fn connection_transition_gap(
    tr: &Transition,
    fx: &FieldFamily,
    fy: &FieldFamily,
    x_inf: &AmbientVector,
) -> Result<f64> {
    let co = co_space(tr);
    check_co_point(&co, x_inf)?;
    let src = levi_civita(&tr.space)?;
    let l = numeric::limit_at_zero(|t| {
        let x = match source_point(tr, x_inf, t) {
            Ok(x) => x,
            Err(_) => return x_inf.map(|_| f64::NAN),
        };
        let (xt, yt) = (fx.field(t), fy.field(t));
        match src.eval(&xt, &yt, &x) {
            Ok(v) => tr.family.apply(t, &v),
            Err(_) => x_inf.map(|_| f64::NAN),
        }
    });
    let conn = co_connection(&co)?;
    let xd = limit_field_at(tr, fx, x_inf)?;
    let yd = match &fy.limit {
        Some(l) => l.clone(),
        None => {
            let (tr2, fy2) = (tr.clone(), fy.clone());
            VectorField::new(move |y| limit_field_at(&tr2, &fy2, y).unwrap_or_else(|_| y.map(|_| f64::NAN)))
        }
    };
    let rhs = conn.covariant(&xd, &yd, x_inf)?;
    Ok((l.value - rhs).amax())
}

/// Extrapolated `|lim (1/t) ω^{src}(X_t, Y_t, Z_t) − ω^{co}(Ẋ, Ẏ, Ż)|`. The
/// factor `1/t = det g_t` makes the source volume that of `S_t`.
pub fn volume_transition_gap(tr: &Transition, fams: &[FieldFamily], x_inf: &AmbientVector) -> Result<f64> {
    let co = co_space(tr);
    check_co_point(&co, x_inf)?;
    check_dim(tr.form().dim() - 1, fams.len())?;
    let om_src = volume_form(&tr.space);
    let l = numeric::limit_at_zero(|t| {
        let v = source_point(tr, x_inf, t).and_then(|x| {
            let vs: Vec<_> = fams.iter().map(|f| f.field(t).at(&x)).collect();
            om_src.eval(&x, &vs)
        });
        DVector::from_element(1, v.map(|v| v / t).unwrap_or(f64::NAN))
    });
    let vs = fams.iter().map(|f| limit_field_at(tr, f, x_inf)).collect::<Result<Vec<_>>>()?;
    let rhs = volume_form(&co).eval(x_inf, &vs)?;
    Ok((l.value[0] - rhs).abs())
}
