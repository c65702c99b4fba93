//! Affine-chart metrics, the infinitesimal Pogorelov map and Killing fields.
//!
//! The curved charts are the Klein model of Hyp^n (`|x| < 1`) and the chart
//! `{x_{n+1} = 1}` of AdS^n (`b_{n-1,1}(x,x) < 1`), with
//! `g_x(X,Y) = ρ² b(X,Y) + ρ⁴ b(x,X) b(x,Y)` and `ρ = (1 - b(x,x))^{-1/2}`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connections::{ambient_derivative, VectorField};
use crate::error::{check_dim, GeomError, Result};
use crate::forms::BilinearForm;
use crate::numeric;

/// Default sample cloud: 512 Halton points in the ball of radius 0.9.
pub const CLOUD_SIZE: usize = 512;
pub const CLOUD_RADIUS: f64 = 0.9;
/// Step for finite differences of the metric.
const METRIC_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartKind {
    HypKlein,
    AdSChart,
    EucFlat,
    MinFlat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartMetric {
    pub kind: ChartKind,
    /// Chart dimension n.
    pub n: usize,
}

impl ChartMetric {
    pub fn new(kind: ChartKind, n: usize) -> Self {
        assert!(n >= 2);
        Self { kind, n }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.kind, ChartKind::EucFlat | ChartKind::MinFlat)
    }

    /// `b_{n,0}` or `b_{n-1,1}` on ℝⁿ.
    pub fn flat_form(&self) -> BilinearForm {
        match self.kind {
            ChartKind::HypKlein | ChartKind::EucFlat => BilinearForm::standard(self.n, 0),
            ChartKind::AdSChart | ChartKind::MinFlat => BilinearForm::standard(self.n - 1, 1),
        }
    }

    /// Form on ℝ^{n+1} whose isometries act on the chart.
    pub fn ambient_form(&self) -> BilinearForm {
        match self.kind {
            ChartKind::HypKlein => BilinearForm::standard(self.n, 1),
            ChartKind::AdSChart => BilinearForm::standard(self.n - 1, 2),
            ChartKind::EucFlat | ChartKind::MinFlat => {
                let mut d = self.flat_form().matrix().diagonal().as_slice().to_vec();
                d.push(0.0);
                BilinearForm::diagonal(&d)
            }
        }
    }

    /// The flat partner of a curved chart and vice versa.
    pub fn partner(&self) -> Self {
        let kind = match self.kind {
            ChartKind::HypKlein => ChartKind::EucFlat,
            ChartKind::EucFlat => ChartKind::HypKlein,
            ChartKind::AdSChart => ChartKind::MinFlat,
            ChartKind::MinFlat => ChartKind::AdSChart,
        };
        Self::new(kind, self.n)
    }

    pub fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.len() == self.n && (self.is_flat() || self.flat_form().q(x) < 1.0)
    }

    fn domain(&self, x: &DVector<f64>) -> Result<()> {
        check_dim(self.n, x.len())?;
        if !self.in_domain(x) {
            return Err(GeomError::NotInSpace {
                space: format!("{:?}", self.kind),
                detail: format!("b(x,x) = {}", self.flat_form().q(x)),
            });
        }
        Ok(())
    }

    /// `ρ(x)`, 1 on flat charts.
    pub fn rho(&self, x: &DVector<f64>) -> Result<f64> {
        self.domain(x)?;
        if self.is_flat() {
            return Ok(1.0);
        }
        Ok(1.0 / (1.0 - self.flat_form().q(x)).sqrt())
    }

    /// Gram matrix `G(x)`.
    pub fn matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let b = self.flat_form();
        let r = self.rho(x)?;
        if self.is_flat() {
            return Ok(b.matrix().clone());
        }
        let jx = b.lower(x);
        let r2 = r * r;
        Ok(b.matrix() * r2 + &jx * jx.transpose() * (r2 * r2))
    }

    pub fn eval(&self, x: &DVector<f64>, a: &DVector<f64>, c: &DVector<f64>) -> Result<f64> {
        check_dim(self.n, a.len())?;
        check_dim(self.n, c.len())?;
        Ok(a.dot(&(self.matrix(x)? * c)))
    }

    /// Levi-Civita connection coefficients in closed form:
    /// `Γ(X,Y) = X(ln ρ) Y + Y(ln ρ) X` with `d ln ρ = ρ² b(x,·)`.
    pub fn gamma(&self, x: &DVector<f64>, a: &DVector<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
        if self.is_flat() {
            check_dim(self.n, x.len())?;
            return Ok(DVector::zeros(self.n));
        }
        let r = self.rho(x)?;
        let b = self.flat_form();
        let dl = b.lower(x) * (r * r);
        Ok(c * dl.dot(a) + a * dl.dot(c))
    }

    /// Volume density `sqrt|det G|`.
    pub fn volume_density(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.matrix(x)?.determinant().abs().sqrt())
    }
}

pub fn chart_metric_eval(m: &ChartMetric, x: &DVector<f64>, a: &DVector<f64>, c: &DVector<f64>) -> Result<f64> {
    m.eval(x, a, c)
}

/// `L` with `g(X,Y) = ĝ(L X, Y)`, i.e. `L = Ĝ⁻¹ G`.
pub fn operator_l_matrix(src: &ChartMetric, dst: &ChartMetric, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let g = src.matrix(x)?;
    let gh = dst.matrix(x)?;
    let lu = gh.lu();
    lu.solve(&g).ok_or_else(|| GeomError::Singular("target metric degenerate at x".into()))
}

pub fn operator_l(src: &ChartMetric, dst: &ChartMetric, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(src.n, v.len())?;
    Ok(operator_l_matrix(src, dst, x)? * v)
}

/// `λ` with `ω_dst = λ ω_src`, closed form for the built-in pairs.
pub fn lambda(src: &ChartMetric, dst: &ChartMetric, x: &DVector<f64>) -> Result<f64> {
    let p = (src.n + 1) as i32;
    Ok(dst.rho(x)?.powi(p) / src.rho(x)?.powi(p))
}

/// `λ` recomputed as a ratio of volume densities.
pub fn lambda_from_volumes(src: &ChartMetric, dst: &ChartMetric, x: &DVector<f64>) -> Result<f64> {
    Ok(dst.volume_density(x)? / src.volume_density(x)?)
}

/// Default sample cloud of a chart (3-dimensional charts only).
pub fn sample_cloud(m: &ChartMetric) -> Vec<DVector<f64>> {
    assert_eq!(m.n, 3, "sample clouds are built for 3-dimensional charts");
    numeric::halton_ball(CLOUD_SIZE, CLOUD_RADIUS)
}

/// `P(K)_x = λ^{2/(n+1)} L_x K_x`. λ is checked on the sample cloud first.
pub fn infinitesimal_pogorelov(k: &VectorField, src: &ChartMetric, dst: &ChartMetric) -> Result<VectorField> {
    if src.n != dst.n {
        return Err(GeomError::DimensionMismatch { expected: src.n, got: dst.n });
    }
    if src.n == 3 {
        for x in sample_cloud(src) {
            let l = lambda(src, dst, &x)?;
            if !(l > 0.0) {
                return Err(GeomError::Precondition(format!("λ = {} at {:?}", l, x.as_slice())));
            }
        }
    }
    let (k, src, dst) = (k.clone(), *src, *dst);
    Ok(VectorField::new(move |x| pogorelov_at(&k.at(x), &src, &dst, x).unwrap_or_else(|_| x.map(|_| f64::NAN))))
}

fn pogorelov_at(v: &DVector<f64>, src: &ChartMetric, dst: &ChartMetric, x: &DVector<f64>) -> Result<DVector<f64>> {
    let l = lambda(src, dst, x)?;
    Ok(operator_l(src, dst, x, v)? * l.powf(2.0 / (src.n + 1) as f64))
}

/// An infinitesimal isometry of `(ℝ^{n+1}, form)` and its chart field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillingField {
    pub generator: DMatrix<f64>,
    pub form: BilinearForm,
}

impl KillingField {
    pub fn new(generator: DMatrix<f64>, form: BilinearForm) -> Result<Self> {
        check_dim(form.dim(), generator.nrows())?;
        check_dim(form.dim(), generator.ncols())?;
        let j = form.matrix();
        let r = (generator.transpose() * j + j * &generator).amax();
        if r > 1e-12 * generator.amax().max(1.0) {
            return Err(GeomError::Tolerance { what: "b-antisymmetry of the generator".into(), value: r, tol: 1e-12 });
        }
        Ok(Self { generator, form })
    }

    pub fn random<R: Rng>(rng: &mut R, form: &BilinearForm, scale: f64) -> Self {
        Self { generator: form.random_generator(rng, scale), form: form.clone() }
    }

    /// Field induced on `{x_{n+1} = 1}`: `K_x = A'x + a - (cᵀx + d) x`.
    pub fn chart_field(&self) -> VectorField {
        let m = &self.generator;
        let n = m.nrows() - 1;
        let a11 = m.view((0, 0), (n, n)).into_owned();
        let a12 = m.view((0, n), (n, 1)).column(0).into_owned();
        let a21 = m.view((n, 0), (1, n)).row(0).transpose();
        let a22 = m[(n, n)];
        let (b11, b21) = (a11.clone(), a21.clone());
        VectorField::new(move |x| &a11 * x + &a12 - x * (a21.dot(x) + a22))
            .with_jacobian(move |x| &b11 - x * b21.transpose() - DMatrix::identity(n, n) * (b21.dot(x) + a22))
    }
}

/// Derivatives `∂_l G` by the five-point stencil.
fn metric_derivatives(m: &ChartMetric, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
    let n = m.n;
    (0..n)
        .map(|l| {
            let mut e = DVector::zeros(n);
            e[l] = METRIC_STEP;
            let at = |k: f64| m.matrix(&(x + &e * k));
            Ok(((at(1.0)? - at(-1.0)?) * 8.0 - at(2.0)? + at(-2.0)?) / (12.0 * METRIC_STEP))
        })
        .collect()
}

/// Lie derivative `(L_K g)_ij = K^l ∂_l g_ij + g_lj ∂_i K^l + g_il ∂_j K^l`.
pub fn lie_derivative_metric(m: &ChartMetric, k: &VectorField, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = m.n;
    let g = m.matrix(x)?;
    let kx = k.at(x);
    let dg = metric_derivatives(m, x)?;
    let mut dk = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        dk.set_column(i, &ambient_derivative(k, &e, x)?);
    }
    let mut out = dk.transpose() * &g + &g * &dk;
    for (l, d) in dg.iter().enumerate() {
        out += d * kx[l];
    }
    Ok(out)
}

/// Sup over `points` of the Killing residual `|L_K g|`.
pub fn killing_residual(m: &ChartMetric, k: &VectorField, points: &[DVector<f64>]) -> Result<f64> {
    let r: Result<Vec<f64>> = points.par_iter().map(|x| Ok(lie_derivative_metric(m, k, x)?.amax())).collect();
    Ok(r?.into_iter().fold(0.0, f64::max))
}

/// Christoffel symbols from finite differences of the metric, as matrices
/// `Γ^k_{ij}`.
pub fn christoffel_numeric(m: &ChartMetric, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
    let n = m.n;
    let g = m.matrix(x)?;
    let gi = g.clone().try_inverse().ok_or_else(|| GeomError::Singular("metric".into()))?;
    let dg = metric_derivatives(m, x)?;
    let mut gam = vec![DMatrix::zeros(n, n); n];
    for (k, gk) in gam.iter_mut().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += gi[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gk[(i, j)] = 0.5 * s;
            }
        }
    }
    Ok(gam)
}

fn apply_gamma(gam: &[DMatrix<f64>], a: &DVector<f64>, c: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(gam.len(), |k, _| a.dot(&(&gam[k] * c)))
}

/// `g(∇_X K, Y) + g(X, ∇_Y K)` with numeric Christoffel symbols.
pub fn killing_form_residual(
    m: &ChartMetric,
    k: &VectorField,
    x: &DVector<f64>,
    a: &DVector<f64>,
    c: &DVector<f64>,
) -> Result<f64> {
    let gam = christoffel_numeric(m, x)?;
    let kx = k.at(x);
    let na = ambient_derivative(k, a, x)? + apply_gamma(&gam, a, &kx);
    let nc = ambient_derivative(k, c, x)? + apply_gamma(&gam, c, &kx);
    Ok(m.eval(x, &na, c)? + m.eval(x, a, &nc)?)
}

fn d_ln_lambda_root(src: &ChartMetric, dst: &ChartMetric, x: &DVector<f64>) -> Result<DVector<f64>> {
    let p = (src.n + 1) as f64;
    let f = |y: &DVector<f64>| lambda_from_volumes(src, dst, y).map(|l| l.ln() / p).unwrap_or(f64::NAN);
    Ok(DVector::from_fn(src.n, |i, _| {
        let mut e = DVector::zeros(src.n);
        e[i] = 1.0;
        numeric::directional_scalar(f, x, &e)
    }))
}

/// `D(X,Y) − [X(ln λ^{1/(n+1)}) Y + Y(ln λ^{1/(n+1)}) X]` with
/// `D = ∇^dst − ∇^src`, everything by finite differences of the metrics.
pub fn weyl_gap(
    src: &ChartMetric,
    dst: &ChartMetric,
    a: &DVector<f64>,
    c: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let d = apply_gamma(&christoffel_numeric(dst, x)?, a, c) - apply_gamma(&christoffel_numeric(src, x)?, a, c);
    let phi = d_ln_lambda_root(src, dst, x)?;
    Ok(d - c * phi.dot(a) - a * phi.dot(c))
}

/// `|C¹₁D(Y) − d ln λ(Y)|`.
pub fn contraction_gap(src: &ChartMetric, dst: &ChartMetric, c: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
    let gs = christoffel_numeric(src, x)?;
    let gd = christoffel_numeric(dst, x)?;
    let n = src.n;
    let mut tr = 0.0;
    for k in 0..n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        tr += (apply_gamma(&gd, &e, c) - apply_gamma(&gs, &e, c))[k];
    }
    let dl = d_ln_lambda_root(src, dst, x)? * (n + 1) as f64;
    Ok((tr - dl.dot(c)).abs())
}

pub type PatchMap = Arc<dyn Fn(f64, f64) -> DVector<f64> + Send + Sync>;

/// A parametrized surface `σ(u,v)` in a chart, sampled on a grid.
#[derive(Clone)]
pub struct Patch {
    pub sigma: PatchMap,
    pub u: (f64, f64),
    pub v: (f64, f64),
    pub grid: usize,
}

impl std::fmt::Debug for Patch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Patch").field("u", &self.u).field("v", &self.v).field("grid", &self.grid).finish()
    }
}

const PATCH_STEP: f64 = 1e-3;

impl Patch {
    pub fn new(
        sigma: impl Fn(f64, f64) -> DVector<f64> + Send + Sync + 'static,
        u: (f64, f64),
        v: (f64, f64),
        grid: usize,
    ) -> Self {
        Self { sigma: Arc::new(sigma), u, v, grid }
    }

    pub fn samples(&self) -> Vec<(f64, f64)> {
        let g = self.grid.max(2);
        let mut out = Vec::with_capacity(g * g);
        for i in 0..g {
            for j in 0..g {
                let s = i as f64 / (g - 1) as f64;
                let t = j as f64 / (g - 1) as f64;
                out.push((self.u.0 + s * (self.u.1 - self.u.0), self.v.0 + t * (self.v.1 - self.v.0)));
            }
        }
        out
    }

    fn partials(f: &PatchMap, u: f64, v: f64) -> [DVector<f64>; 2] {
        [numeric::curve_d1(|s| f(s, v), u, PATCH_STEP), numeric::curve_d1(|s| f(u, s), v, PATCH_STEP)]
    }
}

/// Sup over the patch samples of `|g(∇_i Z, σ_j) + g(σ_i, ∇_j Z)|`, and the
/// worst sample.
pub fn deformation_residual(m: &ChartMetric, patch: &Patch, z: &PatchMap) -> Result<(f64, (f64, f64))> {
    let res: Result<Vec<(f64, (f64, f64))>> = patch
        .samples()
        .into_par_iter()
        .map(|(u, v)| {
            let x = (patch.sigma)(u, v);
            let zx = z(u, v);
            let s = Patch::partials(&patch.sigma, u, v);
            let dz = Patch::partials(z, u, v);
            let nz: Vec<DVector<f64>> =
                (0..2).map(|i| m.gamma(&x, &s[i], &zx).map(|g| &dz[i] + g)).collect::<Result<_>>()?;
            let mut worst: f64 = 0.0;
            for i in 0..2 {
                for j in i..2 {
                    let r = m.eval(&x, &nz[i], &s[j])? + m.eval(&x, &s[i], &nz[j])?;
                    worst = worst.max(r.abs());
                }
            }
            Ok((worst, (u, v)))
        })
        .collect();
    Ok(res?.into_iter().fold((0.0, (f64::NAN, f64::NAN)), |a, b| if b.0 > a.0 { b } else { a }))
}

/// Tolerance for a deformation to count as infinitesimally isometric.
pub const DEFORMATION_TOL: f64 = 1e-7;

/// `P(Z)` along the patch after checking that `Z` is an infinitesimal
/// isometric deformation for `src`.
pub fn rigidity_transport(z: &PatchMap, patch: &Patch, src: &ChartMetric, dst: &ChartMetric) -> Result<PatchMap> {
    let (r, (u, v)) = deformation_residual(src, patch, z)?;
    if r > DEFORMATION_TOL {
        return Err(GeomError::Precondition(format!(
            "not an infinitesimal isometric deformation: residual {:e} at (u,v) = ({}, {})",
            r, u, v
        )));
    }
    let (z, sigma, src, dst) = (z.clone(), patch.sigma.clone(), *src, *dst);
    Ok(Arc::new(move |u, v| {
        let x = sigma(u, v);
        pogorelov_at(&z(u, v), &src, &dst, &x).unwrap_or_else(|_| x.map(|_| f64::NAN))
    }))
}

/// Restriction of a chart field to a patch.
pub fn restrict(k: &VectorField, patch: &Patch) -> PatchMap {
    let (k, s) = (k.clone(), patch.sigma.clone());
    Arc::new(move |u, v| k.at(&s(u, v)))
}

/// Normal deformation `f N_g` of the plane through `p` spanned by `e1, e2`
/// (3-dimensional charts).
/// Planes are totally geodesic in every built-in chart, so these are
/// infinitesimally isometric for any `f`.
pub fn plane_normal_deformation(
    m: &ChartMetric,
    p: DVector<f64>,
    e1: DVector<f64>,
    e2: DVector<f64>,
    f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
) -> (Patch, PatchMap) {
    let (p2, a, b) = (p.clone(), e1.clone(), e2.clone());
    let patch = Patch::new(move |u, v| &p2 + &a * u + &b * v, (-0.2, 0.2), (-0.2, 0.2), 9);
    let m = *m;
    let sigma = patch.sigma.clone();
    let z: PatchMap = Arc::new(move |u, v| {
        let x = sigma(u, v);
        let g = m.matrix(&x).expect("patch inside chart");
        // G N is Euclidean-orthogonal to the plane
        let ker = crate::transition::generalized_cross(&[e1.clone(), e2.clone()]);
        let nv = g.clone().lu().solve(&ker).expect("metric invertible");
        let q = nv.dot(&(&g * &nv)).abs().sqrt();
        nv * (f(u, v) / q)
    });
    (patch, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    const HYP: ChartMetric = ChartMetric { kind: ChartKind::HypKlein, n: 3 };
    const EUC: ChartMetric = ChartMetric { kind: ChartKind::EucFlat, n: 3 };
    const ADS: ChartMetric = ChartMetric { kind: ChartKind::AdSChart, n: 3 };
    const MIN: ChartMetric = ChartMetric { kind: ChartKind::MinFlat, n: 3 };

    #[test]
    fn metric_examples() {
        let e1 = v(&[1.0, 0.0, 0.0]);
        let e2 = v(&[0.0, 1.0, 0.0]);
        let o = v(&[0.0, 0.0, 0.0]);
        assert_eq!(HYP.eval(&o, &e1, &e2).unwrap(), 0.0);
        assert_eq!(HYP.eval(&o, &e2, &e2).unwrap(), 1.0);
        let x = v(&[0.5, 0.0, 0.0]);
        assert!((HYP.eval(&x, &e1, &e1).unwrap() - 16.0 / 9.0).abs() < 1e-15);
        assert!((HYP.eval(&x, &e2, &e2).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(HYP.eval(&v(&[1.0, 0.1, 0.0]), &e1, &e1).is_err());
        assert!(ADS.eval(&v(&[0.5, 0.2, 3.0]), &e1, &e1).is_ok());
        assert!(ADS.eval(&v(&[1.0, 0.2, 0.0]), &e1, &e1).is_err());
    }

    #[test]
    fn metric_is_induced_from_the_quadric() {
        // oracle: pull back the ambient form through r(x) = ρ (x, 1)
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in [HYP, ADS] {
            let amb = m.ambient_form();
            let r = |y: &DVector<f64>| {
                let rho = 1.0 / (1.0 - m.flat_form().q(y)).sqrt();
                v(&[y[0] * rho, y[1] * rho, y[2] * rho, rho])
            };
            for _ in 0..20 {
                let x = DVector::from_fn(3, |_, _| rng.gen_range(-0.5..0.5));
                let a = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let c = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let ra = numeric::directional(r, &x, &a);
                let rc = numeric::directional(r, &x, &c);
                assert!((amb.b(&ra, &rc) - m.eval(&x, &a, &c).unwrap()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn operator_l_dictionary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!((operator_l_matrix(&HYP, &EUC, &v(&[0.0; 3])).unwrap() - DMatrix::identity(3, 3)).amax() < 1e-15);
        for (src, dst) in [(HYP, EUC), (ADS, MIN)] {
            let b = src.flat_form();
            for x in sample_cloud(&src).into_iter().take(50) {
                let rho = src.rho(&x).unwrap();
                let l = operator_l_matrix(&src, &dst, &x).unwrap();
                assert!((&l * &x - &x * rho.powi(4)).amax() < 1e-9);
                let w = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let lat = &w - &x * (b.b(&x, &w) / b.q(&x));
                assert!((&l * &lat - &lat * rho.powi(2)).amax() < 1e-9);
                assert!((l.determinant() / rho.powi(8) - 1.0).abs() < 1e-9);
                let closed = &w * rho.powi(2) + &x * (rho.powi(4) * b.b(&x, &w));
                assert!((&l * &w - closed).amax() < 1e-9);
                let lv = lambda_from_volumes(&src, &dst, &x).unwrap();
                assert!((lv - lambda(&src, &dst, &x).unwrap()).abs() < 1e-12 * lv.max(1.0));
            }
        }
    }

    #[test]
    fn killing_fields_map_to_killing_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (src, dst) in [(HYP, EUC), (ADS, MIN)] {
            let cloud = sample_cloud(&src);
            for _ in 0..3 {
                let k = KillingField::random(&mut rng, &src.ambient_form(), 1.0);
                let kf = k.chart_field();
                let rs = killing_residual(&src, &kf, &cloud).unwrap();
                assert!(rs < 1e-7, "src {}", rs);
                let p = infinitesimal_pogorelov(&kf, &src, &dst).unwrap();
                let rd = killing_residual(&dst, &p, &cloud).unwrap();
                assert!(rd < 1e-6, "dst {}", rd);
                // closed form P(K) = K + ρ² b(x,K) x
                let b = src.flat_form();
                for x in cloud.iter().take(10) {
                    let kx = kf.at(x);
                    let want = &kx + x * (src.rho(x).unwrap().powi(2) * b.b(x, &kx));
                    assert!((p.at(x) - want).amax() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn killing_examples() {
        // rotation about the x3 axis
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = -1.0;
        a[(1, 0)] = 1.0;
        let k = KillingField::new(a, BilinearForm::standard(3, 1)).unwrap();
        let kf = k.chart_field();
        let x = v(&[0.3, 0.4, 0.1]);
        assert!((kf.at(&x) - v(&[-0.4, 0.3, 0.0])).amax() < 1e-15);
        let p = infinitesimal_pogorelov(&kf, &HYP, &EUC).unwrap();
        assert!((p.at(&x) - kf.at(&x)).amax() < 1e-15);
        let zero = infinitesimal_pogorelov(&VectorField::zero(3), &HYP, &EUC).unwrap();
        assert_eq!(zero.at(&x).amax(), 0.0);
        // boost along x1 gives a Euclidean Killing field
        let mut bst = DMatrix::zeros(4, 4);
        bst[(0, 3)] = 1.0;
        bst[(3, 0)] = 1.0;
        let k = KillingField::new(bst, BilinearForm::standard(3, 1)).unwrap();
        let p = infinitesimal_pogorelov(&k.chart_field(), &HYP, &EUC).unwrap();
        assert!(killing_residual(&EUC, &p, &sample_cloud(&EUC)).unwrap() < 1e-6);
        // a non-antisymmetric generator is rejected
        assert!(KillingField::new(DMatrix::identity(4, 4), BilinearForm::standard(3, 1)).is_err());
    }

    #[test]
    fn killing_form_matches_lie_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = KillingField::random(&mut rng, &HYP.ambient_form(), 1.0).chart_field();
        let nk = VectorField::new(|y: &DVector<f64>| v(&[y[0] * y[0], y[1], 0.0]));
        for x in sample_cloud(&HYP).into_iter().step_by(64) {
            let a = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            assert!(killing_form_residual(&HYP, &k, &x, &a, &a).unwrap().abs() < 1e-6);
            let c = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            let lie = lie_derivative_metric(&HYP, &nk, &x).unwrap();
            let kr = killing_form_residual(&HYP, &nk, &x, &a, &c).unwrap();
            assert!((a.dot(&(&lie * &c)) - kr).abs() < 1e-6);
        }
    }

    #[test]
    fn linearity_and_norm_dictionary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k1 = KillingField::random(&mut rng, &HYP.ambient_form(), 1.0).chart_field();
        let k2 = KillingField::random(&mut rng, &HYP.ambient_form(), 1.0).chart_field();
        let (a, b) = (k1.clone(), k2.clone());
        let sum = VectorField::new(move |x| a.at(x) + b.at(x));
        let p1 = infinitesimal_pogorelov(&k1, &HYP, &EUC).unwrap();
        let p2 = infinitesimal_pogorelov(&k2, &HYP, &EUC).unwrap();
        let ps = infinitesimal_pogorelov(&sum, &HYP, &EUC).unwrap();
        let x = v(&[0.2, -0.3, 0.5]);
        assert!((ps.at(&x) - p1.at(&x) - p2.at(&x)).amax() < 1e-14);
        for (src, dst) in [(HYP, EUC), (ADS, MIN)] {
            let b = src.flat_form();
            for x in sample_cloud(&src).into_iter().take(40) {
                let rho = src.rho(&x).unwrap();
                let w = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let lat = &w - &x * (b.b(&x, &w) / b.q(&x));
                let norm = |m: &ChartMetric, u: &DVector<f64>| m.eval(&x, u, u).unwrap().abs().sqrt();
                let pl = pogorelov_at(&lat, &src, &dst, &x).unwrap();
                assert!((norm(&dst, &pl) - norm(&src, &lat) / rho).abs() < 1e-9);
                let rad = &x * 0.7;
                let pr = pogorelov_at(&rad, &src, &dst, &x).unwrap();
                assert!((norm(&dst, &pr) - norm(&src, &rad)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn weyl_formula_and_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (src, dst) in [(HYP, EUC), (ADS, MIN)] {
            let o = v(&[0.0; 3]);
            let a = v(&[1.0, 0.5, -0.2]);
            assert!(weyl_gap(&src, &dst, &a, &a, &o).unwrap().amax() < 1e-9);
            for x in sample_cloud(&src).into_iter().step_by(32) {
                let a = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let c = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                assert!(weyl_gap(&src, &dst, &a, &c, &x).unwrap().amax() < 1e-6);
                assert!(weyl_gap(&src, &dst, &x, &x, &x).unwrap().amax() < 1e-6);
                assert!(contraction_gap(&src, &dst, &c, &x).unwrap() < 1e-6);
                // closed-form Γ agrees with the numeric one
                let gn = apply_gamma(&christoffel_numeric(&src, &x).unwrap(), &a, &c);
                assert!((gn - src.gamma(&x, &a, &c).unwrap()).amax() < 1e-6);
            }
        }
    }

    #[test]
    fn rigidity_transport_plane_and_killing() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (src, dst) in [(HYP, EUC), (ADS, MIN)] {
            for _ in 0..3 {
                let p = DVector::from_fn(3, |_, _| rng.gen_range(-0.3..0.3));
                let e1 = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let e2 = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                let (a, b) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
                let (patch, z) = plane_normal_deformation(&src, p, e1, e2, move |u, v| (a * u).sin() + b * u * v * v);
                let pz = rigidity_transport(&z, &patch, &src, &dst).unwrap();
                let (r, _) = deformation_residual(&dst, &patch, &pz).unwrap();
                assert!(r < 1e-6, "{}", r);
            }
            // Killing restrictions to a curved patch stay trivial
            let patch = Patch::new(
                |u, w| v(&[0.4 * u.cos() * w.cos(), 0.4 * u.sin() * w.cos(), 0.4 * w.sin()]),
                (0.0, 1.0),
                (-0.5, 0.5),
                7,
            );
            let k = KillingField::random(&mut rng, &src.ambient_form(), 1.0).chart_field();
            let z = restrict(&k, &patch);
            let pz = rigidity_transport(&z, &patch, &src, &dst).unwrap();
            assert!(deformation_residual(&dst, &patch, &pz).unwrap().0 < 1e-6);
            let pk = infinitesimal_pogorelov(&k, &src, &dst).unwrap();
            let pkr = restrict(&pk, &patch);
            for (u, w) in patch.samples() {
                assert!((pz(u, w) - pkr(u, w)).amax() < 1e-12);
            }
            // zero and a stretching field
            let zero: PatchMap = Arc::new(|_, _| DVector::zeros(3));
            assert_eq!(rigidity_transport(&zero, &patch, &src, &dst).unwrap()(0.3, 0.1).amax(), 0.0);
            let stretch = restrict(&VectorField::position(3), &patch);
            match rigidity_transport(&stretch, &patch, &src, &dst) {
                Err(e) => assert!(e.to_string().contains("(u,v)")),
                Ok(_) => panic!("stretching field accepted"),
            }
        }
    }
}
